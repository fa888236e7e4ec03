// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/explorer.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include <json.hpp>

#include "motionmap/error.hpp"
#include "motionmap/nn/container.hpp"
#include "motionmap/workflow.hpp"

namespace motionmap {

using nlohmann::json;

namespace {

HttpResponse error(int status, const std::string& message) {
  return {status, json{{"code", status}, {"message", message}}.dump()};
}

struct BadRequest {
  std::string message;
};

int int_param(const HttpRequest& r, const std::string& name) {
  const auto it = r.query.find(name);
  if (it == r.query.end()) throw BadRequest{"missing query parameter '" + name + "'"};
  int value = 0;
  const auto& s = it->second;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw BadRequest{"query parameter '" + name + "' is not an integer"};
  }
  return value;
}

json flat_frames(const PoseSequence& seq) {
  json frames = json::array();
  for (const auto& f : seq.frames) {
    json pose = json::array();
    for (int j = 0; j < f.rows(); ++j) {
      for (int k = 0; k < 3; ++k) pose.push_back(f(j, k));
    }
    frames.push_back(std::move(pose));
  }
  return frames;
}

json modes_json(const std::vector<Mode>& modes) {
  json out = json::array();
  for (const auto& m : modes) {
    out.push_back({{"row", m.cell.row}, {"col", m.cell.col}, {"confidence", m.confidence}});
  }
  return out;
}

}  // namespace

std::string forecast_json(const RankedForecast& f) {
  json grid = json::array();
  for (Eigen::Index t = 0; t < f.uncertainty.rows(); ++t) {
    for (Eigen::Index j = 0; j < f.uncertainty.cols(); ++j) grid.push_back(f.uncertainty(t, j));
  }
  json body;
  body["frames"] = flat_frames(f.forecast);
  body["reconstruction"] = flat_frames(f.reconstruction);
  body["uncertainty"] = {{"rows", f.uncertainty.rows()},
                         {"cols", f.uncertainty.cols()},
                         {"values", std::move(grid)}};
  body["used_cell"] = {{"row", f.used_cell.row}, {"col", f.used_cell.col}};
  return body.dump();
}

Explorer::Explorer(Models models, std::vector<Sample> samples, std::uint64_t hash)
    : models_(std::move(models)), samples_(std::move(samples)), checkpoint_hash_(hash) {
  std::sort(samples_.begin(), samples_.end(),
            [](const Sample& a, const Sample& b) { return a.id < b.id; });
}

const Sample* Explorer::find(const HttpRequest& r) const {
  const int id = int_param(r, "sample");
  const auto it = std::lower_bound(samples_.begin(), samples_.end(), id,
                                   [](const Sample& s, int v) { return s.id < v; });
  return it != samples_.end() && it->id == id ? &*it : nullptr;
}

HttpResponse Explorer::handle(const HttpRequest& r) const {
  if (r.method != "GET") return error(405, "only GET is supported");
  try {
    if (r.path == "/healthz") {
      return {200, json{{"status", "ok"}, {"checkpoint_hash", checkpoint_hash_}}.dump()};
    }
    if (r.path == "/api/samples") {
      json list = json::array();
      for (const auto& s : samples_) {
        list.push_back({{"id", s.id},
                        {"action_label", s.action_label},
                        {"T_o", s.observation.frame_count()},
                        {"T_f", s.future.frame_count()}});
      }
      return {200, list.dump()};
    }
    if (r.path != "/api/motionmap" && r.path != "/api/forecast" && r.path != "/api/actionmap") {
      return error(404, "no route " + r.path);
    }
    const Sample* sample = find(r);
    if (!sample) return error(404, "unknown sample " + r.query.at("sample"));
    const auto& s = models_.settings;

    if (r.path == "/api/motionmap") {
      const Heatmap hm = models_.heatmap.predict(sample->observation);
      const auto flat = hm.flat();
      json body;
      body["m"] = hm.size();
      body["values"] = std::vector<double>(flat.data(), flat.data() + flat.size());
      body["modes"] = modes_json(extract_maxima(hm, s.threshold, s.nms_radius, s.max_modes));
      return {200, body.dump()};
    }
    if (r.path == "/api/forecast") {
      const HeatmapCell cell{int_param(r, "row"), int_param(r, "col")};
      if (cell.row < 0 || cell.col < 0 || cell.row >= s.heatmap_size ||
          cell.col >= s.heatmap_size) {
        return error(400, "cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                              ") outside the " + std::to_string(s.heatmap_size) + "x" +
                              std::to_string(s.heatmap_size) + " grid");
      }
      try {
        const LatentVector zx = models_.autoencoder.encode_observation(sample->observation);
        return {200, forecast_json(decode_at(models_, zx, cell))};
      } catch (const LookupError& e) {
        return error(422, e.what());
      }
    }
    // /api/actionmap: label histograms of the training futures per cell.
    std::map<HeatmapCell, std::map<std::string, int>> hist;
    for (const auto& a : models_.assignments) ++hist[a.cell][a.action_label];
    json cells = json::array();
    for (const auto& [cell, labels] : hist) {
      cells.push_back({{"row", cell.row}, {"col", cell.col}, {"label_histogram", labels}});
    }
    return {200, json{{"sample", sample->id}, {"cells", std::move(cells)}}.dump()};
  } catch (const BadRequest& e) {
    return error(400, e.message);
  } catch (const Error& e) {
    return error(500, e.what());
  }
}

Explorer load_explorer(const std::filesystem::path& checkpoint, const std::vector<Sample>& samples) {
  std::uint64_t hash = 0;
  Models models = load_models(checkpoint, &hash);
  return Explorer(std::move(models), samples, hash);
}

}  // namespace motionmap
