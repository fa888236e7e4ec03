// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/workflow.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include <json.hpp>

#include "motionmap/error.hpp"

namespace motionmap {

using nlohmann::json;
using nn::Matrix;

Dataset prepare_dataset(const RunConfig& config, MotionCorpus corpus) {
  Dataset d;
  d.corpus = std::move(corpus);
  const auto& dc = config.data;
  auto samples = window_corpus(d.corpus, dc.obs_frames, dc.future_frames, dc.stride);
  if (samples.empty()) throw DomainError("corpus yields no windows");
  const auto test_seqs = choose_test_sequences(d.corpus, dc.test_fraction,
                                               stage_seed(config, SeedStream::kSplit));
  const std::set<int> test_set(test_seqs.begin(), test_seqs.end());
  for (auto& s : samples) {
    if (test_set.count(s.source_sequence)) {
      d.mining.test_ids.push_back(s.id);
      d.test.push_back(std::move(s));
    } else {
      d.train.push_back(std::move(s));
    }
  }
  if (d.train.empty() || d.test.empty()) throw DomainError("split left an empty partition");
  d.mining.obs_frames = dc.obs_frames;
  d.mining.future_frames = dc.future_frames;
  d.mining.stride = dc.stride;
  d.mining.tau = dc.tau;
  const auto& topo = d.corpus.topology;
  d.mining.train = mine_multimodal_gt(d.train, topo, dc.tau);
  d.mining.test_train = mine_against_pool(d.test, d.train, topo, dc.tau);
  d.mining.test_test = mine_multimodal_gt(d.test, topo, dc.tau);
  return d;
}

Dataset load_dataset(const RunConfig& config) {
  Dataset d;
  d.corpus = load_corpus(config.corpus_path());
  d.mining = load_sidecar(config.sidecar_path());
  const auto& dc = config.data;
  if (d.mining.obs_frames != dc.obs_frames || d.mining.future_frames != dc.future_frames ||
      d.mining.stride != dc.stride || d.mining.tau != dc.tau) {
    throw ConfigError("mining sidecar " + config.sidecar_path().string() +
                      " was produced with different data settings; rerun generate");
  }
  const std::set<int> test_ids(d.mining.test_ids.begin(), d.mining.test_ids.end());
  for (auto& s : window_corpus(d.corpus, dc.obs_frames, dc.future_frames, dc.stride)) {
    (test_ids.count(s.id) ? d.test : d.train).push_back(std::move(s));
  }
  if (d.test.size() != test_ids.size()) throw FormatError("sidecar test ids do not match corpus");
  return d;
}

Dataset run_generate(const RunConfig& config) {
  GeneratorConfig gen = config.generator;
  MotionCorpus corpus =
      generate_synthetic_corpus(gen, stage_seed(config, SeedStream::kGenerator));
  Dataset d = prepare_dataset(config, std::move(corpus));
  echo_config(config, config.out_dir());
  save_corpus(d.corpus, config.corpus_path());
  save_sidecar(d.mining, config.sidecar_path());
  return d;
}

const std::vector<Stage>& training_stages() {
  static const std::vector<Stage> stages{Stage::kAutoencoder, Stage::kEmbedding, Stage::kCodebook,
                                         Stage::kHeatmap, Stage::kFinetune};
  return stages;
}

std::string to_string(Stage s) {
  switch (s) {
    case Stage::kNone: return "none";
    case Stage::kAutoencoder: return "autoencoder";
    case Stage::kEmbedding: return "embedding";
    case Stage::kCodebook: return "codebook";
    case Stage::kHeatmap: return "heatmap";
    case Stage::kFinetune: return "finetune";
  }
  return "none";
}

Stage parse_stage(const std::string& s) {
  if (s == "none") return Stage::kNone;
  for (Stage st : training_stages()) {
    if (to_string(st) == s) return st;
  }
  throw FormatError("unknown training stage '" + s + "'");
}

namespace {

Matrix row_vector(const std::vector<double>& v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

std::vector<double> from_row(const Matrix& m) { return {m.data(), m.data() + m.size()}; }

json hyper_json(const EmbeddingHyper& h) {
  return {{"perplexity", h.perplexity},
          {"iterations", h.iterations},
          {"exaggeration", h.exaggeration},
          {"exaggeration_iterations", h.exaggeration_iterations},
          {"initial_momentum", h.initial_momentum},
          {"final_momentum", h.final_momentum},
          {"learning_rate", h.learning_rate},
          {"transform_neighbors", h.transform_neighbors},
          {"transform_perplexity", h.transform_perplexity},
          {"transform_steps", h.transform_steps},
          {"transform_learning_rate", h.transform_learning_rate},
          {"seed", h.seed}};
}

EmbeddingHyper hyper_from(const json& j) {
  EmbeddingHyper h;
  h.perplexity = j.at("perplexity");
  h.iterations = j.at("iterations");
  h.exaggeration = j.at("exaggeration");
  h.exaggeration_iterations = j.at("exaggeration_iterations");
  h.initial_momentum = j.at("initial_momentum");
  h.final_momentum = j.at("final_momentum");
  h.learning_rate = j.at("learning_rate");
  h.transform_neighbors = j.at("transform_neighbors");
  h.transform_perplexity = j.at("transform_perplexity");
  h.transform_steps = j.at("transform_steps");
  h.transform_learning_rate = j.at("transform_learning_rate");
  h.seed = j.at("seed");
  return h;
}

json settings_json(const MotionMapSettings& s) {
  return {{"heatmap_size", s.heatmap_size}, {"margin", s.margin},
          {"sigma", s.sigma},               {"positive_weight", s.positive_weight},
          {"threshold", s.threshold},       {"nms_radius", s.nms_radius},
          {"max_modes", s.max_modes},       {"lookup_radius", s.lookup_radius}};
}

MotionMapSettings settings_from(const json& j) {
  MotionMapSettings s;
  s.heatmap_size = j.at("heatmap_size");
  s.margin = j.at("margin");
  s.sigma = j.at("sigma");
  s.positive_weight = j.at("positive_weight");
  s.threshold = j.at("threshold");
  s.nms_radius = j.at("nms_radius");
  s.max_modes = j.at("max_modes");
  s.lookup_radius = j.at("lookup_radius");
  return s;
}

}  // namespace

nn::Container to_container(const TrainingState& st, std::uint64_t spec_hash) {
  nn::Container c;
  c.spec_hash = spec_hash;
  const Models& m = st.models;
  c.put_text("stage", to_string(st.completed));
  json log = st.stage_log;
  c.put_text("stage_log", log.dump());
  c.put_text("topology", json{{"parents", m.topology.parents()}, {"names", m.topology.names()}}.dump());
  c.put_text("settings", settings_json(m.settings).dump());
  c.put("loss/autoencoder", row_vector(st.autoencoder_loss));
  c.put("loss/heatmap", row_vector(st.heatmap_loss));
  c.put("loss/finetune", row_vector(st.finetune_loss));
  c.put("loss/decode", row_vector({st.decode_loss_before, st.decode_loss_after}));
  if (st.completed >= Stage::kAutoencoder) {
    const auto& d = m.autoencoder.dims();
    c.put_text("ae/dims", json{{"obs_frames", d.obs_frames}, {"future_frames", d.future_frames},
                               {"joints", d.joints}, {"latent", d.latent},
                               {"uncertainty_hidden", d.uncertainty_hidden}}.dump());
    c.put_params("ae", m.autoencoder.params());
  }
  if (st.completed >= Stage::kEmbedding) {
    const auto& e = m.embedding;
    c.put_text("embedding/hyper", hyper_json(e.hyper).dump());
    c.put("embedding/reference", e.reference);
    c.put("embedding/points", e.points);
    c.put("embedding/scaling", row_vector({static_cast<double>(e.heatmap_size), e.margin,
                                           e.offset.x(), e.offset.y(), e.scale.x(), e.scale.y()}));
    Matrix trace(2, static_cast<Eigen::Index>(e.trace.iteration.size()));
    for (std::size_t i = 0; i < e.trace.iteration.size(); ++i) {
      trace(0, static_cast<Eigen::Index>(i)) = e.trace.iteration[i];
      trace(1, static_cast<Eigen::Index>(i)) = e.trace.divergence[i];
    }
    c.put("embedding/trace", trace);
    c.put("embedding/trace_ends", row_vector({e.trace.at_exaggeration_end, e.trace.final}));
  }
  if (st.completed >= Stage::kCodebook) {
    const auto& book = m.codebook;
    const auto k = static_cast<Eigen::Index>(book.populated());
    Matrix cells(k, 3);
    Matrix means(book.latent_size(), k);
    Eigen::Index i = 0;
    for (const auto& [cell, entry] : book.entries()) {
      cells.row(i) << cell.row, cell.col, entry.count;
      means.col(i) = entry.mean;
      ++i;
    }
    c.put("codebook/dims", row_vector({static_cast<double>(book.heatmap_size()),
                                       static_cast<double>(book.latent_size())}));
    c.put("codebook/cells", cells);
    c.put("codebook/means", means);
    Matrix assign(static_cast<Eigen::Index>(m.assignments.size()), 3);
    json labels = json::array();
    for (std::size_t r = 0; r < m.assignments.size(); ++r) {
      const auto& a = m.assignments[r];
      assign.row(static_cast<Eigen::Index>(r)) << a.sample_id, a.cell.row, a.cell.col;
      labels.push_back(a.action_label);
    }
    c.put("assignments/cells", assign);
    c.put_text("assignments/labels", labels.dump());
  }
  if (st.completed >= Stage::kHeatmap) {
    const auto& d = m.heatmap.dims();
    c.put_text("hm/dims", json{{"joints", d.joints}, {"frames", d.frames}, {"hidden", d.hidden},
                               {"heatmap_size", d.heatmap_size},
                               {"conv_channels", d.conv_channels},
                               {"conv_layers", d.conv_layers}}.dump());
    c.put_params("hm", m.heatmap.params());
  }
  return c;
}

TrainingState from_container(const nn::Container& c) {
  TrainingState st;
  try {
    st.completed = parse_stage(c.text("stage"));
    st.stage_log = json::parse(c.text("stage_log")).get<std::vector<std::string>>();
    const json topo = json::parse(c.text("topology"));
    Models& m = st.models;
    m.topology = SkeletonTopology(topo.at("parents").get<std::vector<int>>(),
                                  topo.at("names").get<std::vector<std::string>>());
    m.settings = settings_from(json::parse(c.text("settings")));
    st.autoencoder_loss = from_row(c.matrix("loss/autoencoder"));
    st.heatmap_loss = from_row(c.matrix("loss/heatmap"));
    st.finetune_loss = from_row(c.matrix("loss/finetune"));
    const auto dl = from_row(c.matrix("loss/decode"));
    if (dl.size() != 2) throw FormatError("checkpoint: loss/decode must hold two values");
    st.decode_loss_before = dl[0];
    st.decode_loss_after = dl[1];
    if (st.completed >= Stage::kAutoencoder) {
      const json d = json::parse(c.text("ae/dims"));
      AutoencoderDims dims;
      dims.obs_frames = d.at("obs_frames");
      dims.future_frames = d.at("future_frames");
      dims.joints = d.at("joints");
      dims.latent = d.at("latent");
      dims.uncertainty_hidden = d.at("uncertainty_hidden");
      m.autoencoder = AutoencoderModel(dims, c.get_params("ae"));
    }
    if (st.completed >= Stage::kEmbedding) {
      auto& e = m.embedding;
      e.hyper = hyper_from(json::parse(c.text("embedding/hyper")));
      e.reference = c.matrix("embedding/reference");
      e.points = c.matrix("embedding/points");
      const auto sc = from_row(c.matrix("embedding/scaling"));
      if (sc.size() != 6) throw FormatError("checkpoint: embedding/scaling must hold six values");
      e.heatmap_size = static_cast<int>(sc[0]);
      e.margin = sc[1];
      e.offset = {sc[2], sc[3]};
      e.scale = {sc[4], sc[5]};
      const Matrix& trace = c.matrix("embedding/trace");
      for (Eigen::Index i = 0; i < trace.cols(); ++i) {
        e.trace.iteration.push_back(static_cast<int>(trace(0, i)));
        e.trace.divergence.push_back(trace(1, i));
      }
      const auto ends = from_row(c.matrix("embedding/trace_ends"));
      e.trace.at_exaggeration_end = ends.at(0);
      e.trace.final = ends.at(1);
      if (e.points.rows() != e.reference.rows() || e.points.cols() != 2) {
        throw FormatError("checkpoint: embedding points and reference disagree");
      }
    }
    if (st.completed >= Stage::kCodebook) {
      const auto dims = from_row(c.matrix("codebook/dims"));
      const Matrix& cells = c.matrix("codebook/cells");
      const Matrix& means = c.matrix("codebook/means");
      if (dims.size() != 2 || cells.cols() != 3 || means.cols() != cells.rows()) {
        throw FormatError("checkpoint: malformed codebook");
      }
      m.codebook = Codebook(static_cast<int>(dims[0]), static_cast<int>(dims[1]));
      for (Eigen::Index i = 0; i < cells.rows(); ++i) {
        m.codebook.insert({static_cast<int>(cells(i, 0)), static_cast<int>(cells(i, 1))},
                          {means.col(i), static_cast<int>(cells(i, 2))});
      }
      const Matrix& assign = c.matrix("assignments/cells");
      const auto labels =
          json::parse(c.text("assignments/labels")).get<std::vector<std::string>>();
      if (assign.cols() != 3 || static_cast<std::size_t>(assign.rows()) != labels.size()) {
        throw FormatError("checkpoint: malformed assignments");
      }
      for (Eigen::Index i = 0; i < assign.rows(); ++i) {
        m.assignments.push_back({static_cast<int>(assign(i, 0)),
                                 {static_cast<int>(assign(i, 1)), static_cast<int>(assign(i, 2))},
                                 labels[static_cast<std::size_t>(i)]});
      }
    }
    if (st.completed >= Stage::kHeatmap) {
      const json d = json::parse(c.text("hm/dims"));
      HeatmapModelDims dims;
      dims.joints = d.at("joints");
      dims.frames = d.at("frames");
      dims.hidden = d.at("hidden");
      dims.heatmap_size = d.at("heatmap_size");
      dims.conv_channels = d.at("conv_channels");
      dims.conv_layers = d.at("conv_layers");
      m.heatmap = HeatmapModel(dims, c.get_params("hm"));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed metadata: ") + e.what());
  } catch (const std::out_of_range& e) {
    throw FormatError(std::string("checkpoint: ") + e.what());
  }
  return st;
}

Models load_models(const std::filesystem::path& path, std::uint64_t* spec_hash) {
  const nn::Container c = nn::Container::load(path);
  TrainingState st = from_container(c);
  if (st.completed != Stage::kFinetune) {
    throw FormatError("checkpoint " + path.string() + " is incomplete (last stage: " +
                      to_string(st.completed) + ")");
  }
  if (spec_hash) *spec_hash = c.spec_hash;
  return std::move(st.models);
}

namespace {

nn::AdamHyper adam(double step, double clip) {
  nn::AdamHyper h;
  h.step_size = step;
  h.clip_norm = clip;
  return h;
}

std::vector<PoseSequence> observations_of(const std::vector<Sample>& samples) {
  std::vector<PoseSequence> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.observation);
  return out;
}

}  // namespace

TrainingState run_training(const RunConfig& config, const Dataset& data, TrainingState st,
                           const std::filesystem::path& checkpoint, const ProgressFn& progress) {
  const auto& train = data.train;
  if (train.empty()) throw DomainError("training: empty training split");
  Models& m = st.models;
  m.topology = data.corpus.topology;
  m.settings = config.motionmap.settings;
  const auto& topo = m.topology;
  const auto report = [&](const std::string& stage) {
    return [&progress, stage](int epoch, double loss) {
      if (progress) progress(stage, epoch + 1, loss);
    };
  };
  const auto finish = [&](Stage s) {
    st.completed = s;
    st.stage_log.push_back(to_string(s));
    if (!checkpoint.empty()) to_container(st, config.spec_hash()).save(checkpoint);
  };
  const auto future_latents = [&]() {
    Eigen::MatrixXd z(static_cast<Eigen::Index>(train.size()), config.autoencoder.latent);
    for (std::size_t i = 0; i < train.size(); ++i) {
      z.row(static_cast<Eigen::Index>(i)) = m.autoencoder.encode_future(train[i].future).transpose();
    }
    return z;
  };
  const auto guard = [](const std::string& stage, const auto& fn) {
    try {
      fn();
    } catch (const DivergenceError& e) {
      throw DivergenceError("stage " + stage + ": " + e.what());
    } catch (const DomainError& e) {
      throw DomainError("stage " + stage + ": " + e.what());
    }
  };

  if (st.completed < Stage::kAutoencoder) {
    guard("autoencoder", [&] {
      m.autoencoder = AutoencoderModel(config.autoencoder_dims(),
                                       stage_seed(config, SeedStream::kAutoencoderInit));
      TrainOptions opt;
      opt.epochs = config.autoencoder.epochs;
      opt.unit_variance_epochs = config.autoencoder.unit_variance_epochs;
      opt.batch_size = config.autoencoder.batch_size;
      opt.adam = adam(config.autoencoder.step_size, config.autoencoder.clip_norm);
      opt.seed = stage_seed(config, SeedStream::kAutoencoderTrain);
      opt.on_epoch = report("autoencoder");
      st.autoencoder_loss =
          train_autoencoder(m.autoencoder, train, train, data.mining.train, topo, opt).loss_curve;
    });
    finish(Stage::kAutoencoder);
  }
  if (st.completed < Stage::kEmbedding) {
    guard("embedding", [&] {
      EmbeddingHyper hyper = config.embedding;
      hyper.seed = stage_seed(config, SeedStream::kEmbedding);
      m.embedding = scale_to_heatmap(fit_embedding(future_latents(), hyper),
                                     m.settings.heatmap_size, m.settings.margin);
    });
    if (progress) progress("embedding", m.embedding.hyper.iterations, m.embedding.trace.final);
    finish(Stage::kEmbedding);
  }
  if (st.completed < Stage::kCodebook) {
    guard("codebook", [&] {
      const Eigen::MatrixXd z = m.embedding.reference;
      std::vector<std::pair<HeatmapCell, LatentVector>> pairs;
      m.assignments.clear();
      for (std::size_t i = 0; i < train.size(); ++i) {
        const LatentVector zy = z.row(static_cast<Eigen::Index>(i)).transpose();
        const HeatmapCell cell = future_cell(m, zy);
        pairs.emplace_back(cell, zy);
        m.assignments.push_back({train[i].id, cell, train[i].action_label});
      }
      m.codebook = build_codebook(pairs, m.settings.heatmap_size, config.autoencoder.latent);
    });
    if (progress) progress("codebook", 1, static_cast<double>(m.codebook.populated()));
    finish(Stage::kCodebook);
  }
  std::map<int, HeatmapCell> cell_of;
  for (const auto& a : m.assignments) cell_of[a.sample_id] = a.cell;
  if (st.completed < Stage::kHeatmap) {
    guard("heatmap", [&] {
      std::vector<Heatmap> targets;
      for (const auto& s : train) {
        std::vector<HeatmapCell> cells;
        for (int id : data.mining.train.members_of(s.id)) cells.push_back(cell_of.at(id));
        targets.push_back(stamp_heatmap(cells, m.settings.sigma, m.settings.heatmap_size));
      }
      m.heatmap = HeatmapModel(config.heatmap_dims(), stage_seed(config, SeedStream::kHeatmapInit));
      HeatmapTrainOptions opt;
      opt.epochs = config.motionmap.epochs;
      opt.batch_size = config.motionmap.batch_size;
      opt.positive_weight = m.settings.positive_weight;
      opt.adam = adam(config.motionmap.step_size, config.motionmap.clip_norm);
      opt.seed = stage_seed(config, SeedStream::kHeatmapTrain);
      opt.on_epoch = report("heatmap");
      st.heatmap_loss = train_heatmap_model(m.heatmap, observations_of(train), targets, opt).loss_curve;
    });
    finish(Stage::kHeatmap);
  }
  if (st.completed < Stage::kFinetune) {
    guard("finetune", [&] {
      const FutureLatentFn latent_for = [&](int id) -> LatentVector {
        return m.codebook.find(cell_of.at(id), 0.0).latent->eval();
      };
      st.decode_loss_before = decode_loss(m.autoencoder, train, latent_for);
      TrainOptions opt;
      opt.epochs = config.autoencoder.finetune_epochs;
      opt.batch_size = config.autoencoder.batch_size;
      opt.adam = adam(config.autoencoder.step_size * config.autoencoder.finetune_step_scale,
                      config.autoencoder.clip_norm);
      opt.seed = stage_seed(config, SeedStream::kFinetune);
      opt.on_epoch = report("finetune");
      st.finetune_loss =
          finetune(m.autoencoder, train, train, data.mining.train, topo, latent_for, opt).loss_curve;
      st.decode_loss_after = decode_loss(m.autoencoder, train, latent_for);
    });
    finish(Stage::kFinetune);
  }
  return st;
}

TrainingState run_train(const RunConfig& config, bool resume, const ProgressFn& progress) {
  const Dataset data = load_dataset(config);
  echo_config(config, config.out_dir());
  TrainingState start;
  const auto path = config.checkpoint_path();
  if (resume && std::filesystem::exists(path)) {
    const nn::Container c = nn::Container::load(path);
    if (c.spec_hash != config.spec_hash()) {
      throw ConfigError("checkpoint " + path.string() +
                        " was produced by a different configuration; cannot resume");
    }
    start = from_container(c);
  }
  TrainingState st = run_training(config, data, std::move(start), path, progress);

  json manifest;
  manifest["spec_hash"] = config.spec_hash();
  manifest["stages"] = st.stage_log;
  manifest["train_samples"] = data.train.size();
  manifest["test_samples"] = data.test.size();
  manifest["codebook_cells"] = st.models.codebook.populated();
  manifest["decode_loss_before_finetune"] = st.decode_loss_before;
  manifest["decode_loss_after_finetune"] = st.decode_loss_after;
  manifest["kl_after_exaggeration"] = st.models.embedding.trace.at_exaggeration_end;
  manifest["kl_final"] = st.models.embedding.trace.final;
  std::ofstream out(config.out_dir() / "train_manifest.json");
  out << manifest.dump(2) << "\n";
  return st;
}

EvaluationOutput run_evaluate(const RunConfig& config) {
  const Dataset data = load_dataset(config);
  std::uint64_t hash = 0;
  const Models models = load_models(config.checkpoint_path(), &hash);
  if (hash != config.spec_hash()) {
    throw ConfigError("checkpoint " + config.checkpoint_path().string() +
                      " was produced by a different configuration");
  }
  const Protocol p = config.evaluation.protocol;
  EvaluationOutput out;
  out.report = evaluate(models, data.test, data.test_index(p), data.test_pool(p), p,
                        config.evaluation.budget);
  echo_config(config, config.out_dir());
  const std::string stem = "metrics_" + to_string(p) + "_k" + std::to_string(config.evaluation.budget);
  out.table = config.out_dir() / (stem + ".txt");
  out.jsonl = config.out_dir() / (stem + ".jsonl");
  std::ofstream(out.table) << metrics_table(out.report);
  std::ofstream(out.jsonl) << metrics_jsonl(out.report);
  return out;
}

}  // namespace motionmap
