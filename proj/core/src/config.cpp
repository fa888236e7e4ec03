// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "motionmap/error.hpp"
#include "motionmap/nn/container.hpp"
#include "motionmap/rng.hpp"

namespace motionmap {

using nlohmann::json;

namespace {

json to_json(const RunConfig& c) {
  const auto& g = c.generator;
  const auto& a = c.autoencoder;
  const auto& e = c.embedding;
  const auto& m = c.motionmap;
  const auto& s = m.settings;
  json j;
  j["seed"] = c.seed;
  j["generator"] = {{"joints", g.joints},
                    {"fps", g.fps},
                    {"families", g.families},
                    {"sequences_per_family", g.sequences_per_family},
                    {"prefix_frames", g.prefix_frames},
                    {"motion_frames", g.motion_frames},
                    {"actor_scale_min", g.actor_scale_min},
                    {"actor_scale_max", g.actor_scale_max},
                    {"proportion_jitter", g.proportion_jitter},
                    {"speed_jitter", g.speed_jitter},
                    {"amplitude_jitter", g.amplitude_jitter},
                    {"noise", g.noise},
                    {"preparation", g.preparation},
                    {"preparation_frames", g.preparation_frames}};
  j["data"] = {{"obs_frames", c.data.obs_frames},
               {"future_frames", c.data.future_frames},
               {"stride", c.data.stride},
               {"tau", c.data.tau},
               {"test_fraction", c.data.test_fraction}};
  j["autoencoder"] = {{"latent", a.latent},
                      {"uncertainty_hidden", a.uncertainty_hidden},
                      {"epochs", a.epochs},
                      {"unit_variance_epochs", a.unit_variance_epochs},
                      {"batch_size", a.batch_size},
                      {"step_size", a.step_size},
                      {"clip_norm", a.clip_norm},
                      {"finetune_epochs", a.finetune_epochs},
                      {"finetune_step_scale", a.finetune_step_scale}};
  j["embedding"] = {{"perplexity", e.perplexity},
                    {"iterations", e.iterations},
                    {"exaggeration", e.exaggeration},
                    {"exaggeration_iterations", e.exaggeration_iterations},
                    {"initial_momentum", e.initial_momentum},
                    {"final_momentum", e.final_momentum},
                    {"learning_rate", e.learning_rate},
                    {"transform_neighbors", e.transform_neighbors},
                    {"transform_perplexity", e.transform_perplexity},
                    {"transform_steps", e.transform_steps},
                    {"transform_learning_rate", e.transform_learning_rate}};
  j["motionmap"] = {{"heatmap_size", s.heatmap_size},
                    {"margin", s.margin},
                    {"sigma", s.sigma},
                    {"positive_weight", s.positive_weight},
                    {"threshold", s.threshold},
                    {"nms_radius", s.nms_radius},
                    {"max_modes", s.max_modes},
                    {"lookup_radius", s.lookup_radius},
                    {"hidden", m.hidden},
                    {"conv_channels", m.conv_channels},
                    {"conv_layers", m.conv_layers},
                    {"epochs", m.epochs},
                    {"batch_size", m.batch_size},
                    {"step_size", m.step_size},
                    {"clip_norm", m.clip_norm}};
  j["evaluation"] = {{"budget", c.evaluation.budget},
                     {"protocol", to_string(c.evaluation.protocol)}};
  j["paths"] = {{"out", c.paths.out}};
  j["serve"] = {{"host", c.serve.host}, {"port", c.serve.port}};
  return j;
}

RunConfig from_json(const json& j) {
  RunConfig c;
  c.seed = j.at("seed").get<std::uint64_t>();
  const auto& g = j.at("generator");
  c.generator.joints = g.at("joints");
  c.generator.fps = g.at("fps");
  c.generator.families = g.at("families");
  c.generator.sequences_per_family = g.at("sequences_per_family");
  c.generator.prefix_frames = g.at("prefix_frames");
  c.generator.motion_frames = g.at("motion_frames");
  c.generator.actor_scale_min = g.at("actor_scale_min");
  c.generator.actor_scale_max = g.at("actor_scale_max");
  c.generator.proportion_jitter = g.at("proportion_jitter");
  c.generator.speed_jitter = g.at("speed_jitter");
  c.generator.amplitude_jitter = g.at("amplitude_jitter");
  c.generator.noise = g.at("noise");
  c.generator.preparation = g.at("preparation");
  c.generator.preparation_frames = g.at("preparation_frames");
  const auto& d = j.at("data");
  c.data.obs_frames = d.at("obs_frames");
  c.data.future_frames = d.at("future_frames");
  c.data.stride = d.at("stride");
  c.data.tau = d.at("tau");
  c.data.test_fraction = d.at("test_fraction");
  const auto& a = j.at("autoencoder");
  c.autoencoder.latent = a.at("latent");
  c.autoencoder.uncertainty_hidden = a.at("uncertainty_hidden");
  c.autoencoder.epochs = a.at("epochs");
  c.autoencoder.unit_variance_epochs = a.at("unit_variance_epochs");
  c.autoencoder.batch_size = a.at("batch_size");
  c.autoencoder.step_size = a.at("step_size");
  c.autoencoder.clip_norm = a.at("clip_norm");
  c.autoencoder.finetune_epochs = a.at("finetune_epochs");
  c.autoencoder.finetune_step_scale = a.at("finetune_step_scale");
  const auto& e = j.at("embedding");
  c.embedding.perplexity = e.at("perplexity");
  c.embedding.iterations = e.at("iterations");
  c.embedding.exaggeration = e.at("exaggeration");
  c.embedding.exaggeration_iterations = e.at("exaggeration_iterations");
  c.embedding.initial_momentum = e.at("initial_momentum");
  c.embedding.final_momentum = e.at("final_momentum");
  c.embedding.learning_rate = e.at("learning_rate");
  c.embedding.transform_neighbors = e.at("transform_neighbors");
  c.embedding.transform_perplexity = e.at("transform_perplexity");
  c.embedding.transform_steps = e.at("transform_steps");
  c.embedding.transform_learning_rate = e.at("transform_learning_rate");
  const auto& m = j.at("motionmap");
  auto& s = c.motionmap.settings;
  s.heatmap_size = m.at("heatmap_size");
  s.margin = m.at("margin");
  s.sigma = m.at("sigma");
  s.positive_weight = m.at("positive_weight");
  s.threshold = m.at("threshold");
  s.nms_radius = m.at("nms_radius");
  s.max_modes = m.at("max_modes");
  s.lookup_radius = m.at("lookup_radius");
  c.motionmap.hidden = m.at("hidden");
  c.motionmap.conv_channels = m.at("conv_channels");
  c.motionmap.conv_layers = m.at("conv_layers");
  c.motionmap.epochs = m.at("epochs");
  c.motionmap.batch_size = m.at("batch_size");
  c.motionmap.step_size = m.at("step_size");
  c.motionmap.clip_norm = m.at("clip_norm");
  const auto& ev = j.at("evaluation");
  c.evaluation.budget = ev.at("budget");
  c.evaluation.protocol = parse_protocol(ev.at("protocol").get<std::string>());
  c.paths.out = j.at("paths").at("out").get<std::string>();
  c.serve.host = j.at("serve").at("host").get<std::string>();
  c.serve.port = j.at("serve").at("port");
  c.embedding.seed = stage_seed(c, SeedStream::kEmbedding);
  return c;
}

bool same_kind(const json& reference, const json& value) {
  if (reference.is_number_integer()) return value.is_number_integer();
  if (reference.is_number()) return value.is_number();
  return reference.type() == value.type();
}

// Copies `patch` into `base`, rejecting keys `base` lacks and values whose
// type differs from the default's.
void merge_strict(json& base, const json& patch, const std::string& where) {
  if (!patch.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, value] : patch.items()) {
    const std::string path = where.empty() ? key : where + "." + key;
    if (!base.contains(key)) throw ConfigError("unknown config key '" + path + "'");
    json& target = base[key];
    if (target.is_object()) {
      merge_strict(target, value, path);
    } else if (!same_kind(target, value)) {
      throw ConfigError("config key '" + path + "' expects " + std::string(target.type_name()) +
                        ", got " + value.type_name());
    } else {
      target = value;
    }
  }
}

RunConfig checked(const json& j, bool validate = true) {
  RunConfig c;
  try {
    c = from_json(j);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  if (validate) c.validate();
  return c;
}

}  // namespace

std::uint64_t stage_seed(const RunConfig& config, SeedStream stream) {
  return derive_seed(config.seed, static_cast<std::uint64_t>(stream));
}

void RunConfig::validate() const {
  const auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid config: " + what);
  };
  try {
    generator.validate();
  } catch (const Error& e) {
    throw ConfigError(std::string("invalid config: ") + e.what());
  }
  require(data.obs_frames >= 3, "data.obs_frames must be >= 3");
  require(data.future_frames >= 1, "data.future_frames must be >= 1");
  require(data.stride >= 1, "data.stride must be >= 1");
  require(data.tau >= 0.0, "data.tau must be >= 0");
  require(data.test_fraction > 0.0 && data.test_fraction < 1.0,
          "data.test_fraction must be in (0, 1)");
  require(autoencoder.latent >= 1 && autoencoder.uncertainty_hidden >= 1,
          "autoencoder sizes must be positive");
  require(autoencoder.epochs >= 0 && autoencoder.finetune_epochs >= 0, "epochs must be >= 0");
  require(autoencoder.unit_variance_epochs >= 0 &&
              autoencoder.unit_variance_epochs <= autoencoder.epochs,
          "autoencoder.unit_variance_epochs must be within [0, epochs]");
  require(autoencoder.batch_size >= 1, "autoencoder.batch_size must be >= 1");
  require(autoencoder.step_size > 0.0 && autoencoder.finetune_step_scale > 0.0,
          "autoencoder step sizes must be positive");
  require(embedding.perplexity > 0.0, "embedding.perplexity must be positive");
  require(embedding.iterations >= 1, "embedding.iterations must be >= 1");
  require(embedding.exaggeration_iterations >= 0 &&
              embedding.exaggeration_iterations <= embedding.iterations,
          "embedding.exaggeration_iterations must be within [0, iterations]");
  require(embedding.transform_neighbors >= 1, "embedding.transform_neighbors must be >= 1");
  const auto& s = motionmap.settings;
  require(s.heatmap_size >= 4, "motionmap.heatmap_size must be >= 4");
  require(s.sigma > 0.0, "motionmap.sigma must be positive");
  require(s.positive_weight >= 1.0, "motionmap.positive_weight must be >= 1");
  require(s.threshold >= 0.0 && s.threshold <= 1.0, "motionmap.threshold must be in [0, 1]");
  require(s.nms_radius >= 1, "motionmap.nms_radius must be >= 1");
  require(s.lookup_radius >= 0.0, "motionmap.lookup_radius must be >= 0");
  require(motionmap.hidden >= 1 && motionmap.conv_channels >= 1 && motionmap.conv_layers >= 1,
          "motionmap model sizes must be positive");
  require(motionmap.epochs >= 0 && motionmap.batch_size >= 1 && motionmap.step_size > 0.0,
          "motionmap training settings");
  require(evaluation.budget >= 1, "evaluation.budget must be >= 1");
  require(!paths.out.empty(), "paths.out must not be empty");
  require(serve.port >= 0 && serve.port <= 65535, "serve.port must be in [0, 65535]");
  require(generator.prefix_frames + generator.motion_frames >= data.obs_frames + data.future_frames,
          "generated sequences are shorter than one window");
}

AutoencoderDims RunConfig::autoencoder_dims() const {
  AutoencoderDims d;
  d.obs_frames = data.obs_frames;
  d.future_frames = data.future_frames;
  d.joints = generator.joints;
  d.latent = autoencoder.latent;
  d.uncertainty_hidden = autoencoder.uncertainty_hidden;
  return d;
}

HeatmapModelDims RunConfig::heatmap_dims() const {
  HeatmapModelDims d;
  d.joints = generator.joints;
  d.frames = kMiningFrames;
  d.hidden = motionmap.hidden;
  d.heatmap_size = motionmap.settings.heatmap_size;
  d.conv_channels = motionmap.conv_channels;
  d.conv_layers = motionmap.conv_layers;
  return d;
}

std::uint64_t RunConfig::spec_hash() const {
  json j = to_json(*this);
  j.erase("paths");
  j.erase("serve");
  j.erase("evaluation");
  return nn::fnv1a(j.dump());
}

RunConfig parse_config(const std::string& text) {
  json patch;
  try {
    patch = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  json base = to_json(RunConfig{});
  merge_strict(base, patch, "");
  return checked(base);
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string config_to_json(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

void apply_override(RunConfig& config, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError("override '" + assignment + "' is not of the form key=value");
  }
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json patch = value;
  std::vector<std::string> parts;
  std::stringstream ss(key);
  for (std::string part; std::getline(ss, part, '.');) parts.push_back(part);
  for (auto it = parts.rbegin(); it != parts.rend(); ++it) patch = json{{*it, patch}};
  json base = to_json(config);
  merge_strict(base, patch, "");
  config = checked(base, false);
}

void echo_config(const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  std::ofstream out(dir / "config.resolved.json");
  if (!out) throw IoError("cannot write " + (dir / "config.resolved.json").string());
  out << config_to_json(config);
}

}  // namespace motionmap
