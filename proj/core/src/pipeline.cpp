// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <set>

#include <json.hpp>

#include "motionmap/error.hpp"

namespace motionmap {

HeatmapCell future_cell(const Embedding2D& emb, const LatentVector& zy) {
  return quantize(transform_new(emb, zy), emb.heatmap_size);
}

HeatmapCell future_cell(const Models& models, const LatentVector& zy) {
  return future_cell(models.embedding, zy);
}

RankedForecast decode_at(const Models& models, const LatentVector& zx, const HeatmapCell& cell) {
  const int m = models.settings.heatmap_size;
  if (cell.row < 0 || cell.col < 0 || cell.row >= m || cell.col >= m) {
    throw DomainError("cell (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                      ") outside the " + std::to_string(m) + "x" + std::to_string(m) + " grid");
  }
  const LookupResult hit = models.codebook.find(cell, models.settings.lookup_radius);
  const auto& ae = models.autoencoder;
  const LatentVector fused = ae.fuse(zx, *hit.latent);
  const PoseSequence whole = ae.decode(fused);
  RankedForecast out;
  out.mode.cell = cell;
  out.used_cell = hit.used_cell;
  out.reconstruction = whole.slice(0, ae.dims().obs_frames);
  out.forecast = whole.slice(ae.dims().obs_frames, ae.dims().future_frames);
  out.uncertainty = ae.predict_uncertainty(fused);
  return out;
}

ForecastResult forecast(const Models& models, const PoseSequence& observation, int budget) {
  const auto& s = models.settings;
  ForecastResult result;
  result.heatmap = models.heatmap.predict(observation);
  result.maxima = extract_maxima(result.heatmap, s.threshold, s.nms_radius, s.max_modes);
  const LatentVector zx = models.autoencoder.encode_observation(observation);

  // Maxima far from every populated cell have no latent and take no slot.
  std::vector<Mode> chosen;
  for (const auto& mode : result.maxima) {
    if (budget > 0 && static_cast<int>(chosen.size()) >= budget) break;
    try {
      (void)models.codebook.find(mode.cell, s.lookup_radius);
    } catch (const LookupError&) {
      continue;
    }
    chosen.push_back(mode);
  }
  std::vector<bool> expanded(chosen.size(), false);
  if (budget > static_cast<int>(chosen.size())) {
    std::vector<Mode> pool;
    for (const auto& [cell, entry] : models.codebook.entries()) {
      pool.push_back({cell, result.heatmap.at(cell)});
    }
    std::stable_sort(pool.begin(), pool.end(),
                     [](const Mode& a, const Mode& b) { return a.confidence > b.confidence; });
    const auto taken = [&](const HeatmapCell& c, int radius) {
      return std::any_of(chosen.begin(), chosen.end(), [&](const Mode& m) {
        return std::max(std::abs(m.cell.row - c.row), std::abs(m.cell.col - c.col)) <= radius;
      });
    };
    for (int radius : {s.nms_radius, 0}) {
      for (const auto& cand : pool) {
        if (static_cast<int>(chosen.size()) >= budget) break;
        if (taken(cand.cell, radius)) continue;
        chosen.push_back(cand);
        expanded.push_back(true);
      }
    }
  }
  std::vector<std::size_t> order(chosen.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return chosen[a].confidence > chosen[b].confidence;
  });
  for (std::size_t i : order) {
    RankedForecast f = decode_at(models, zx, chosen[i].cell);
    f.mode = chosen[i];
    f.expanded = expanded[i];
    f.rank = static_cast<int>(result.forecasts.size()) + 1;
    result.forecasts.push_back(std::move(f));
  }
  return result;
}

PoseSequence zero_velocity(const PoseSequence& observation, int future_frames) {
  if (observation.frames.empty()) throw ShapeError("zero_velocity: empty observation");
  if (future_frames < 1) throw DomainError("zero_velocity: future_frames must be positive");
  PoseSequence out;
  out.fps = observation.fps;
  out.frames.assign(future_frames, observation.frames.back());
  return out;
}

namespace {

void check_pair(const PoseSequence& a, const PoseSequence& b, const char* what) {
  if (a.frame_count() != b.frame_count() || a.joint_count() != b.joint_count() ||
      a.frames.empty()) {
    throw ShapeError(std::string(what) + ": sequences differ in shape");
  }
}

template <typename Fn>
double min_over(const std::vector<PoseSequence>& preds, const PoseSequence& gt, Fn fn,
                const char* what) {
  if (preds.empty()) throw DomainError(std::string(what) + ": no predictions");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& p : preds) {
    check_pair(p, gt, what);
    best = std::min(best, fn(p, gt));
  }
  return best;
}

}  // namespace

double sequence_distance(const PoseSequence& a, const PoseSequence& b) {
  check_pair(a, b, "sequence_distance");
  double total = 0.0;
  for (int f = 0; f < a.frame_count(); ++f) total += (a.frames[f] - b.frames[f]).norm();
  return total / a.frame_count();
}

double final_frame_distance(const PoseSequence& a, const PoseSequence& b) {
  check_pair(a, b, "final_frame_distance");
  return (a.frames.back() - b.frames.back()).norm();
}

double ade(const std::vector<PoseSequence>& preds, const PoseSequence& gt) {
  return min_over(preds, gt, sequence_distance, "ade");
}

double fde(const std::vector<PoseSequence>& preds, const PoseSequence& gt) {
  return min_over(preds, gt, final_frame_distance, "fde");
}

double mmade(const std::vector<PoseSequence>& preds, const std::vector<PoseSequence>& gts) {
  if (gts.empty()) throw DomainError("mmade: no ground truths");
  double total = 0.0;
  for (const auto& gt : gts) total += ade(preds, gt);
  return total / static_cast<double>(gts.size());
}

double mmfde(const std::vector<PoseSequence>& preds, const std::vector<PoseSequence>& gts) {
  if (gts.empty()) throw DomainError("mmfde: no ground truths");
  double total = 0.0;
  for (const auto& gt : gts) total += fde(preds, gt);
  return total / static_cast<double>(gts.size());
}

std::vector<PoseSequence> transfer_ground_truths(const std::vector<PoseSequence>& gts,
                                                 const PoseSequence& observation,
                                                 const SkeletonTopology& topo) {
  std::vector<PoseSequence> out;
  out.reserve(gts.size());
  for (const auto& gt : gts) out.push_back(motion_transfer(observation, gt, topo));
  return out;
}

std::optional<double> diversity(const std::vector<PoseSequence>& preds) {
  if (preds.size() < 2) return std::nullopt;
  double total = 0.0;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < preds.size(); ++i) {
    for (std::size_t j = i + 1; j < preds.size(); ++j) {
      check_pair(preds[i], preds[j], "diversity");
      double sq = 0.0;
      for (int f = 0; f < preds[i].frame_count(); ++f) {
        sq += (preds[i].frames[f] - preds[j].frames[f]).squaredNorm();
      }
      total += std::sqrt(sq);
      ++pairs;
    }
  }
  return total / static_cast<double>(pairs);
}

std::string to_string(Protocol p) {
  return p == Protocol::kTrainMined ? "train-mined" : "test-mined";
}

Protocol parse_protocol(const std::string& s) {
  if (s == "train-mined") return Protocol::kTrainMined;
  if (s == "test-mined") return Protocol::kTestMined;
  throw ConfigError("unknown protocol '" + s + "' (expected train-mined or test-mined)");
}

const MethodMetrics& MetricsReport::method(const std::string& name) const {
  for (const auto& m : methods) {
    if (m.method == name) return m;
  }
  throw LookupError("metrics report has no method '" + name + "'");
}

MetricsReport evaluate(const Models& models, const std::vector<Sample>& test_samples,
                       const MultimodalGTIndex& gt_index, const std::vector<Sample>& pool,
                       Protocol protocol, int budget) {
  if (test_samples.empty()) throw DomainError("evaluate: empty test set");
  if (budget < 1) throw DomainError("evaluate: budget must be >= 1");
  const auto& s = models.settings;
  std::map<int, const Sample*> pool_by_id;
  for (const auto& p : pool) pool_by_id[p.id] = &p;
  std::vector<const Sample*> ordered;
  for (const auto& t : test_samples) ordered.push_back(&t);
  std::sort(ordered.begin(), ordered.end(),
            [](const Sample* a, const Sample* b) { return a->id < b->id; });

  MetricsReport report;
  report.protocol = protocol;
  report.budget = budget;
  report.sample_count = static_cast<int>(ordered.size());
  report.recall_radius = s.nms_radius;
  MethodMetrics mm;
  mm.method = "motionmap";
  mm.budget = budget;
  mm.samples = report.sample_count;
  MethodMetrics zv;
  zv.method = "zero_velocity";
  zv.budget = 1;
  zv.samples = report.sample_count;
  double div_sum = 0.0;
  int div_count = 0;

  for (const Sample* sample : ordered) {
    std::set<int> ids(gt_index.members_of(sample->id).begin(),
                      gt_index.members_of(sample->id).end());
    std::vector<PoseSequence> raw{sample->future};
    for (int id : ids) {
      if (id == sample->id) continue;
      const auto it = pool_by_id.find(id);
      if (it == pool_by_id.end()) {
        throw DomainError("evaluate: ground truth " + std::to_string(id) + " not in pool");
      }
      raw.push_back(it->second->future);
    }
    const auto gts = transfer_ground_truths(raw, sample->observation, models.topology);

    const ForecastResult result = forecast(models, sample->observation, budget);
    if (result.no_confident_future()) {
      throw DomainError("evaluate: no forecast for sample " + std::to_string(sample->id));
    }
    std::vector<PoseSequence> preds;
    for (const auto& f : result.forecasts) preds.push_back(f.forecast);
    mm.ade += ade(preds, sample->future);
    mm.fde += fde(preds, sample->future);
    mm.mmade += mmade(preds, gts);
    mm.mmfde += mmfde(preds, gts);
    if (const auto d = diversity(preds)) {
      div_sum += *d;
      ++div_count;
    }
    const std::vector<PoseSequence> zero{
        zero_velocity(sample->observation, sample->future.frame_count())};
    zv.ade += ade(zero, sample->future);
    zv.fde += fde(zero, sample->future);
    zv.mmade += mmade(zero, gts);
    zv.mmfde += mmfde(zero, gts);

    std::vector<HeatmapCell> gt_cells;
    for (const auto& fut : raw) {
      gt_cells.push_back(future_cell(models, models.autoencoder.encode_future(fut)));
    }
    const auto gt_modes = extract_maxima(stamp_heatmap(gt_cells, s.sigma, s.heatmap_size),
                                         s.threshold, s.nms_radius);
    for (const auto& g : gt_modes) {
      ++report.gt_modes;
      const bool hit = std::any_of(result.maxima.begin(), result.maxima.end(), [&](const Mode& p) {
        return std::max(std::abs(p.cell.row - g.cell.row), std::abs(p.cell.col - g.cell.col)) <=
               report.recall_radius;
      });
      if (hit) ++report.recalled_modes;
    }
    ++report.maxima_histogram[static_cast<int>(result.maxima.size())];

    if (result.forecasts.size() >= 2) {
      ++report.ranked_samples;
      report.rank_first_ade += sequence_distance(result.forecasts.front().forecast, sample->future);
      report.rank_last_ade += sequence_distance(result.forecasts.back().forecast, sample->future);
    }
  }
  const double n = report.sample_count;
  for (auto* m : {&mm, &zv}) {
    m->ade /= n;
    m->fde /= n;
    m->mmade /= n;
    m->mmfde /= n;
  }
  if (div_count > 0) mm.diversity = div_sum / div_count;
  if (report.ranked_samples > 0) {
    report.rank_first_ade /= report.ranked_samples;
    report.rank_last_ade /= report.ranked_samples;
  }
  report.methods = {mm, zv};
  return report;
}

std::string metrics_table(const MetricsReport& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf,
                "# protocol=%s budget=%d samples=%d diversity=mean over unordered pairs\n",
                to_string(r.protocol).c_str(), r.budget, r.sample_count);
  out += buf;
  std::snprintf(buf, sizeof buf, "%-14s %6s %10s %10s %10s %10s %10s\n", "method", "k",
                "Diversity", "ADE", "FDE", "MMADE", "MMFDE");
  out += buf;
  for (const auto& m : r.methods) {
    char div[32];
    if (m.diversity) {
      std::snprintf(div, sizeof div, "%.4f", *m.diversity);
    } else {
      std::snprintf(div, sizeof div, "-");
    }
    std::snprintf(buf, sizeof buf, "%-14s %6d %10s %10.4f %10.4f %10.4f %10.4f\n",
                  m.method.c_str(), m.budget, div, m.ade, m.fde, m.mmade, m.mmfde);
    out += buf;
  }
  std::snprintf(buf, sizeof buf, "mode recall: %d / %d = %.4f (radius %d)\n", r.recalled_modes,
                r.gt_modes, r.mode_recall(), r.recall_radius);
  out += buf;
  std::snprintf(buf, sizeof buf, "rank-1 ADE %.4f, rank-last ADE %.4f over %d samples\n",
                r.rank_first_ade, r.rank_last_ade, r.ranked_samples);
  out += buf;
  out += "maxima per sample:";
  for (const auto& [count, samples] : r.maxima_histogram) {
    out += " " + std::to_string(count) + ":" + std::to_string(samples);
  }
  out += "\n";
  return out;
}

std::string metrics_jsonl(const MetricsReport& r) {
  std::string out;
  for (const auto& m : r.methods) {
    nlohmann::json j;
    j["record"] = "method";
    j["protocol"] = to_string(r.protocol);
    j["method"] = m.method;
    j["budget"] = m.budget;
    j["samples"] = m.samples;
    j["diversity"] = m.diversity ? nlohmann::json(*m.diversity) : nlohmann::json(nullptr);
    j["ade"] = m.ade;
    j["fde"] = m.fde;
    j["mmade"] = m.mmade;
    j["mmfde"] = m.mmfde;
    out += j.dump() + "\n";
  }
  nlohmann::json s;
  s["record"] = "summary";
  s["protocol"] = to_string(r.protocol);
  s["budget"] = r.budget;
  s["samples"] = r.sample_count;
  s["gt_modes"] = r.gt_modes;
  s["recalled_modes"] = r.recalled_modes;
  s["mode_recall"] = r.mode_recall();
  s["recall_radius"] = r.recall_radius;
  s["ranked_samples"] = r.ranked_samples;
  s["rank_first_ade"] = r.rank_first_ade;
  s["rank_last_ade"] = r.rank_last_ade;
  nlohmann::json hist = nlohmann::json::object();
  for (const auto& [count, samples] : r.maxima_histogram) hist[std::to_string(count)] = samples;
  s["maxima_histogram"] = hist;
  out += s.dump() + "\n";
  return out;
}

}  // namespace motionmap
