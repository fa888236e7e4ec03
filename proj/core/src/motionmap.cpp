// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/motionmap.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <set>

#include "motionmap/error.hpp"
#include "motionmap/rng.hpp"

namespace motionmap {

using nn::Matrix;
using nn::Tape;
using nn::Var;

Heatmap::Heatmap(Eigen::MatrixXd v) : values(std::move(v)) {
  if (values.rows() != values.cols() || values.rows() < 1) {
    throw ShapeError("heatmap must be a non-empty square grid");
  }
  if (!values.allFinite() || (values.array() < 0.0).any() || (values.array() > 1.0).any()) {
    throw DomainError("heatmap values must be finite and within [0, 1]");
  }
}

Eigen::VectorXd Heatmap::flat() const {
  const int m = size();
  Eigen::VectorXd out(static_cast<Eigen::Index>(m) * m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) out[r * m + c] = values(r, c);
  }
  return out;
}

Heatmap Heatmap::from_flat(const Eigen::VectorXd& flat, int m) {
  if (flat.size() != static_cast<Eigen::Index>(m) * m) throw ShapeError("heatmap: flat length");
  Eigen::MatrixXd v(m, m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) v(r, c) = flat[r * m + c];
  }
  return Heatmap(std::move(v));
}

Heatmap stamp_heatmap(const std::vector<HeatmapCell>& cells, double sigma, int m) {
  if (cells.empty()) throw DomainError("stamp_heatmap: no cells");
  if (!(sigma > 0.0)) throw DomainError("stamp_heatmap: sigma must be positive");
  if (m < 1) throw DomainError("stamp_heatmap: bad heatmap size");
  const std::set<HeatmapCell> unique(cells.begin(), cells.end());
  Heatmap hm(m);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (const auto& cell : unique) {
    if (!hm.contains(cell)) {
      throw DomainError("stamp_heatmap: cell (" + std::to_string(cell.row) + ", " +
                        std::to_string(cell.col) + ") outside the grid");
    }
    for (int r = 0; r < m; ++r) {
      for (int c = 0; c < m; ++c) {
        const double dr = r - cell.row;
        const double dc = c - cell.col;
        hm.values(r, c) = std::max(hm.values(r, c), std::exp(-(dr * dr + dc * dc) * inv));
      }
    }
  }
  return hm;
}

std::vector<Mode> extract_maxima(const Heatmap& hm, double threshold, int nms_radius, int max_k) {
  if (threshold < 0.0 || threshold > 1.0) throw DomainError("extract_maxima: threshold");
  if (nms_radius < 1) throw DomainError("extract_maxima: nms_radius must be >= 1");
  const int m = hm.size();
  std::vector<Mode> candidates;
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const double v = hm.values(r, c);
      if (v < threshold) continue;
      bool peak = true;
      for (int dr = -1; dr <= 1 && peak; ++dr) {
        for (int dc = -1; dc <= 1; ++dc) {
          const int rr = r + dr;
          const int cc = c + dc;
          if ((dr || dc) && rr >= 0 && cc >= 0 && rr < m && cc < m && hm.values(rr, cc) > v) {
            peak = false;
            break;
          }
        }
      }
      if (peak) candidates.push_back({{r, c}, v});
    }
  }
  // Candidates are generated in row-major order, so a stable sort keeps the
  // row-major tie rule.
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Mode& a, const Mode& b) { return a.confidence > b.confidence; });
  std::vector<Mode> accepted;
  for (const auto& cand : candidates) {
    if (max_k > 0 && static_cast<int>(accepted.size()) >= max_k) break;
    const bool suppressed = std::any_of(accepted.begin(), accepted.end(), [&](const Mode& a) {
      return std::max(std::abs(a.cell.row - cand.cell.row), std::abs(a.cell.col - cand.cell.col)) <=
             nms_radius;
    });
    if (!suppressed) accepted.push_back(cand);
  }
  return accepted;
}

double weighted_bce(const Heatmap& pred, const Heatmap& target, double w) {
  if (pred.size() != target.size()) throw ShapeError("weighted_bce: heatmap sizes differ");
  const double lo = Tape::kMinProbability;
  double total = 0.0;
  for (Eigen::Index k = 0; k < pred.values.size(); ++k) {
    const double p = std::clamp(pred.values.data()[k], lo, 1.0 - lo);
    const double t = target.values.data()[k];
    total -= w * t * std::log(p) + (1.0 - t) * std::log(1.0 - p);
  }
  return total / static_cast<double>(pred.values.size());
}

void Codebook::insert(const HeatmapCell& cell, CodebookEntry entry) {
  if (cell.row < 0 || cell.col < 0 || cell.row >= m_ || cell.col >= m_) {
    throw DomainError("codebook: cell outside the grid");
  }
  if (entry.mean.size() != n_) throw ShapeError("codebook: latent length mismatch");
  if (entry.count < 1) throw DomainError("codebook: entry count must be >= 1");
  entries_[cell] = std::move(entry);
}

LookupResult Codebook::find(const HeatmapCell& cell, double radius) const {
  if (entries_.empty()) throw LookupError("codebook is empty");
  if (auto it = entries_.find(cell); it != entries_.end()) {
    return {cell, &it->second.mean, true, 0.0};
  }
  const CodebookEntry* best = nullptr;
  HeatmapCell best_cell;
  long best_d2 = 0;
  // std::map iterates (row, col) lexicographically, i.e. row-major, so a
  // strict comparison keeps the first of equidistant cells.
  for (const auto& [c, entry] : entries_) {
    const long dr = c.row - cell.row;
    const long dc = c.col - cell.col;
    const long d2 = dr * dr + dc * dc;
    if (!best || d2 < best_d2) {
      best = &entry;
      best_cell = c;
      best_d2 = d2;
    }
  }
  const double d = std::sqrt(static_cast<double>(best_d2));
  if (d > radius) {
    throw LookupError("no populated codebook cell within " + std::to_string(radius) +
                      " cells of (" + std::to_string(cell.row) + ", " + std::to_string(cell.col) +
                      ")");
  }
  return {best_cell, &best->mean, false, d};
}

Codebook build_codebook(const std::vector<std::pair<HeatmapCell, LatentVector>>& pairs, int m,
                        int n) {
  if (pairs.empty()) throw DomainError("build_codebook: no latents");
  std::map<HeatmapCell, CodebookEntry> sums;
  for (const auto& [cell, latent] : pairs) {
    if (latent.size() != n) throw ShapeError("build_codebook: latent length mismatch");
    auto& e = sums[cell];
    if (e.count == 0) {
      e.mean = latent;
    } else {
      e.mean += latent;
    }
    ++e.count;
  }
  Codebook book(m, n);
  for (auto& [cell, e] : sums) {
    e.mean /= static_cast<double>(e.count);
    book.insert(cell, std::move(e));
  }
  return book;
}

namespace {

std::string conv_name(int layer, const char* what) {
  return "h.c" + std::to_string(layer) + "." + what;
}

}  // namespace

HeatmapModel::HeatmapModel(const HeatmapModelDims& d, std::uint64_t seed) : dims_(d), params_(seed) {
  if (d.joints < 1 || d.frames < 1 || d.hidden < 1 || d.heatmap_size < 2 || d.conv_channels < 1 ||
      d.conv_layers < 1) {
    throw ShapeError("HeatmapModel: bad dimensions");
  }
  const int cells = d.heatmap_size * d.heatmap_size;
  params_.add_glorot("h.Wi", 3 * d.hidden, 3 * d.joints);
  params_.add_glorot("h.Wh", 3 * d.hidden, d.hidden);
  params_.add_zeros("h.bi", 3 * d.hidden, 1);
  params_.add_zeros("h.bh", 3 * d.hidden, 1);
  params_.add_glorot("h.Wd", cells, d.hidden);
  params_.add_zeros("h.bd", cells, 1);
  for (int l = 0; l < d.conv_layers; ++l) {
    const int in = l == 0 ? 1 : d.conv_channels;
    const int out = l + 1 == d.conv_layers ? 1 : d.conv_channels;
    params_.add_glorot(conv_name(l, "W"), out, in);
    params_.add_zeros(conv_name(l, "b"), out, 1);
  }
}

HeatmapModel::HeatmapModel(const HeatmapModelDims& d, nn::ParameterStore params)
    : dims_(d), params_(std::move(params)) {
  const int cells = d.heatmap_size * d.heatmap_size;
  if (!params_.contains("h.Wd") || params_.at("h.Wd").rows() != cells ||
      params_.at("h.Wd").cols() != d.hidden || !params_.contains("h.Wi") ||
      params_.at("h.Wi").cols() != 3 * d.joints ||
      !params_.contains(conv_name(d.conv_layers - 1, "W"))) {
    throw ShapeError("heatmap model parameters do not match its dimensions");
  }
}

Var HeatmapModel::forward(Tape& t, const std::vector<const PoseSequence*>& observations) const {
  if (observations.empty()) throw ShapeError("HeatmapModel: empty batch");
  const auto batch = static_cast<Eigen::Index>(observations.size());
  const int dim = 3 * dims_.joints;
  const int cells = dims_.heatmap_size * dims_.heatmap_size;
  Var h = t.constant(Matrix::Zero(dims_.hidden, batch));
  Var wi = t.parameter(params_, "h.Wi");
  Var wh = t.parameter(params_, "h.Wh");
  Var bi = t.parameter(params_, "h.bi");
  Var bh = t.parameter(params_, "h.bh");
  for (int step = 0; step < dims_.frames; ++step) {
    Matrix x(dim, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const PoseSequence& obs = *observations[b];
      if (obs.frame_count() < dims_.frames) {
        throw ShapeError("HeatmapModel: observation has " + std::to_string(obs.frame_count()) +
                         " frames, needs " + std::to_string(dims_.frames));
      }
      if (obs.joint_count() != dims_.joints) throw ShapeError("HeatmapModel: joint count");
      const Pose& pose = obs.frames[obs.frame_count() - dims_.frames + step];
      x.col(b) = Eigen::Map<const Eigen::VectorXd>(pose.data(), dim);
    }
    if (!x.allFinite()) throw DomainError("HeatmapModel: non-finite observation");
    h = t.gru_cell(t.constant(std::move(x)), h, wi, wh, bi, bh);
  }
  Var grid = t.affine(t.parameter(params_, "h.Wd"), h, t.parameter(params_, "h.bd"));
  // One channel per pixel: (channels x pixels*batch).
  Var a = t.reshape(grid, 1, cells * static_cast<int>(batch));
  for (int l = 0; l < dims_.conv_layers; ++l) {
    a = t.affine(t.parameter(params_, conv_name(l, "W")), a, t.parameter(params_, conv_name(l, "b")));
    if (l + 1 < dims_.conv_layers) a = t.elu(a);
  }
  return t.reshape(t.sigmoid(a), cells, static_cast<int>(batch));
}

Heatmap HeatmapModel::predict(const PoseSequence& observation) const {
  Tape t;
  const Matrix out = t.value(forward(t, {&observation}));
  return Heatmap::from_flat(out.col(0), dims_.heatmap_size);
}

HeatmapTrainReport train_heatmap_model(HeatmapModel& model,
                                       const std::vector<PoseSequence>& observations,
                                       const std::vector<Heatmap>& targets,
                                       const HeatmapTrainOptions& opt, nn::AdamState* external) {
  if (observations.empty()) throw DomainError("train_heatmap_model: empty dataset");
  if (observations.size() != targets.size()) {
    throw ShapeError("train_heatmap_model: one target heatmap per observation required");
  }
  if (opt.epochs < 0 || opt.batch_size < 1) throw DomainError("train_heatmap_model: bad options");
  const int m = model.dims().heatmap_size;
  std::vector<Eigen::VectorXd> flat_targets;
  flat_targets.reserve(targets.size());
  for (const auto& hm : targets) {
    if (hm.size() != m) throw ShapeError("train_heatmap_model: target heatmap size");
    flat_targets.push_back(hm.flat());
  }

  nn::AdamState local;
  nn::AdamState& state = external ? *external : local;
  Rng rng(opt.seed);
  HeatmapTrainReport report;
  std::vector<std::size_t> order(observations.size());
  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += opt.batch_size) {
      const std::size_t end = std::min(order.size(), start + opt.batch_size);
      std::vector<const PoseSequence*> batch;
      Matrix target(static_cast<Eigen::Index>(m) * m, static_cast<Eigen::Index>(end - start));
      for (std::size_t k = start; k < end; ++k) {
        batch.push_back(&observations[order[k]]);
        target.col(static_cast<Eigen::Index>(k - start)) = flat_targets[order[k]];
      }
      Tape t;
      Var prob = model.forward(t, batch);
      Var loss = t.scale(t.weighted_bce_sum(prob, target, opt.positive_weight),
                         1.0 / static_cast<double>(target.size()));
      const double value = t.value(loss)(0, 0);
      if (!std::isfinite(value)) {
        throw DivergenceError("heatmap loss became non-finite at epoch " + std::to_string(epoch + 1));
      }
      t.backward(loss);
      nn::optimizer_step(model.params(), t.parameter_gradients(), state, opt.adam);
      epoch_loss += value * static_cast<double>(end - start);
    }
    epoch_loss /= static_cast<double>(observations.size());
    report.loss_curve.push_back(epoch_loss);
    if (opt.on_epoch) opt.on_epoch(epoch, epoch_loss);
  }
  return report;
}

std::string heatmap_pgm(const Heatmap& hm, const std::vector<HeatmapCell>& marks) {
  const int m = hm.size();
  std::string out = "P5\n" + std::to_string(m) + " " + std::to_string(m) + "\n255\n";
  const std::size_t header = out.size();
  out.resize(header + static_cast<std::size_t>(m) * m);
  for (int r = 0; r < m; ++r) {
    for (int c = 0; c < m; ++c) {
      const double v = std::clamp(hm.values(r, c), 0.0, 1.0);
      out[header + r * m + c] = static_cast<char>(static_cast<unsigned char>(std::lround(v * 255.0)));
    }
  }
  for (const auto& c : marks) {
    if (hm.contains(c)) out[header + c.row * m + c.col] = static_cast<char>(255);
  }
  return out;
}

std::string heatmap_tsv(const Heatmap& hm) {
  std::string out = "row\tcol\tvalue\n";
  char buf[64];
  for (int r = 0; r < hm.size(); ++r) {
    for (int c = 0; c < hm.size(); ++c) {
      std::snprintf(buf, sizeof buf, "%d\t%d\t%.6f\n", r, c, hm.values(r, c));
      out += buf;
    }
  }
  return out;
}

}  // namespace motionmap
