// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "motionmap/error.hpp"
#include "motionmap/rng.hpp"

namespace motionmap {
namespace {

Eigen::MatrixXd squared_distances(const Eigen::MatrixXd& x) {
  const Eigen::Index n = x.rows();
  Eigen::MatrixXd d(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    d(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = (x.row(i) - x.row(j)).squaredNorm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

}  // namespace

Eigen::VectorXd calibrated_affinities(const Eigen::VectorXd& sq, double perplexity) {
  const Eigen::Index n = sq.size();
  if (n == 0) throw DomainError("calibrated_affinities: no neighbors");
  if (!(perplexity > 0.0)) throw DomainError("perplexity must be positive");
  const double target = std::log(perplexity);
  // Distances are shifted by their minimum so exp never underflows to all
  // zeros; the shift cancels in the normalization.
  const double dmin = sq.minCoeff();
  double beta = 1.0;
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  Eigen::VectorXd p(n);
  for (int iter = 0; iter < 200; ++iter) {
    double sum = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      p[j] = std::exp(-beta * (sq[j] - dmin));
      sum += p[j];
    }
    double h = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) h += beta * (sq[j] - dmin) * p[j];
    h = h / sum + std::log(sum);
    p /= sum;
    const double diff = h - target;
    if (std::abs(diff) < 1e-5) break;
    if (diff > 0.0) {
      lo = beta;
      beta = std::isinf(hi) ? beta * 2.0 : 0.5 * (beta + hi);
    } else {
      hi = beta;
      beta = 0.5 * (beta + lo);
    }
  }
  return p;
}

Eigen::MatrixXd joint_affinities(const Eigen::MatrixXd& latents, double perplexity) {
  const Eigen::Index n = latents.rows();
  const Eigen::MatrixXd d = squared_distances(latents);
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd row(n - 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0, k = 0; j < n; ++j) {
      if (j != i) row[k++] = d(i, j);
    }
    const Eigen::VectorXd cond = calibrated_affinities(row, perplexity);
    for (Eigen::Index j = 0, k = 0; j < n; ++j) {
      if (j != i) p(i, j) = cond[k++];
    }
  }
  Eigen::MatrixXd sym = (p + p.transpose()) / (2.0 * static_cast<double>(n));
  return sym.cwiseMax(1e-12);
}

double kl_divergence(const Eigen::MatrixXd& p, const Eigen::MatrixXd& y) {
  const Eigen::Index n = y.rows();
  double qsum = 0.0;
  Eigen::MatrixXd num(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    num(i, i) = 0.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
      num(i, j) = v;
      num(j, i) = v;
      qsum += 2.0 * v;
    }
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double q = std::max(num(i, j) / qsum, 1e-12);
      kl += p(i, j) * std::log(p(i, j) / q);
    }
  }
  return kl;
}

Embedding2D fit_embedding(const Eigen::MatrixXd& latents, const EmbeddingHyper& hyper) {
  const Eigen::Index n = latents.rows();
  if (n < 2) throw DomainError("fit_embedding: need at least 2 latents");
  if (!latents.allFinite()) throw DomainError("fit_embedding: non-finite latent");
  if (!(hyper.perplexity < static_cast<double>(n))) {
    throw DomainError("fit_embedding: perplexity must be below the number of latents");
  }
  if (hyper.iterations < 1 || hyper.exaggeration_iterations < 0) {
    throw DomainError("fit_embedding: bad iteration counts");
  }
  const Eigen::MatrixXd p = joint_affinities(latents, hyper.perplexity);
  const double lr = hyper.learning_rate > 0.0 ? hyper.learning_rate : static_cast<double>(n) / 12.0;

  Rng rng(hyper.seed);
  Eigen::MatrixXd y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    y(i, 0) = 1e-4 * rng.normal();
    y(i, 1) = 1e-4 * rng.normal();
  }
  Eigen::MatrixXd update = Eigen::MatrixXd::Zero(n, 2);
  Eigen::MatrixXd gains = Eigen::MatrixXd::Ones(n, 2);
  Eigen::MatrixXd num(n, n);
  Eigen::MatrixXd grad(n, 2);

  Embedding2D emb;
  emb.reference = latents;
  emb.hyper = hyper;

  for (int iter = 0; iter < hyper.iterations; ++iter) {
    const bool early = iter < hyper.exaggeration_iterations;
    const double exag = early ? hyper.exaggeration : 1.0;
    const double momentum = early ? hyper.initial_momentum : hyper.final_momentum;

    double qsum = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      num(i, i) = 0.0;
      for (Eigen::Index j = i + 1; j < n; ++j) {
        const double v = 1.0 / (1.0 + (y.row(i) - y.row(j)).squaredNorm());
        num(i, j) = v;
        num(j, i) = v;
        qsum += 2.0 * v;
      }
    }
    for (Eigen::Index i = 0; i < n; ++i) {
      double gx = 0.0;
      double gy = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (i == j) continue;
        const double w = (exag * p(i, j) - num(i, j) / qsum) * num(i, j);
        gx += w * (y(i, 0) - y(j, 0));
        gy += w * (y(i, 1) - y(j, 1));
      }
      grad(i, 0) = 4.0 * gx;
      grad(i, 1) = 4.0 * gy;
    }
    for (Eigen::Index k = 0; k < grad.size(); ++k) {
      double& gain = gains.data()[k];
      const bool same_sign = (grad.data()[k] > 0.0) == (update.data()[k] > 0.0);
      gain = same_sign ? gain * 0.8 : gain + 0.2;
      gain = std::max(gain, 0.01);
      update.data()[k] = momentum * update.data()[k] - lr * gain * grad.data()[k];
      y.data()[k] += update.data()[k];
    }
    y.rowwise() -= y.colwise().mean();

    const bool exag_end = iter + 1 == hyper.exaggeration_iterations;
    const bool last = iter + 1 == hyper.iterations;
    if ((iter + 1) % 50 == 0 || exag_end || last) {
      const double kl = kl_divergence(p, y);
      emb.trace.iteration.push_back(iter + 1);
      emb.trace.divergence.push_back(kl);
      if (exag_end) emb.trace.at_exaggeration_end = kl;
      if (last) emb.trace.final = kl;
    }
  }
  if (hyper.exaggeration_iterations == 0) emb.trace.at_exaggeration_end = emb.trace.divergence.front();
  emb.points = y;
  return emb;
}

Eigen::Vector2d Embedding2D::to_heatmap(const Eigen::Vector2d& raw) const {
  if (!is_scaled()) throw DomainError("embedding has not been scaled to a heatmap");
  return ((raw - offset).array() * scale.array() + margin).matrix();
}

Eigen::MatrixXd Embedding2D::scaled_points() const {
  Eigen::MatrixXd out(points.rows(), 2);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    out.row(i) = to_heatmap(points.row(i).transpose()).transpose();
  }
  return out;
}

Embedding2D scale_to_heatmap(Embedding2D emb, int m, double margin) {
  if (m < 2) throw DomainError("scale_to_heatmap: heatmap size must be >= 2");
  if (margin < 0.0 || 2.0 * margin >= m - 1) throw DomainError("scale_to_heatmap: bad margin");
  const Eigen::Vector2d lo = emb.points.colwise().minCoeff().transpose();
  const Eigen::Vector2d hi = emb.points.colwise().maxCoeff().transpose();
  for (int a = 0; a < 2; ++a) {
    if (!(hi[a] > lo[a])) {
      throw DomainError("scale_to_heatmap: embedding has zero extent along axis " +
                        std::to_string(a));
    }
  }
  const double span = (m - 1) - 2.0 * margin;
  emb.heatmap_size = m;
  emb.margin = margin;
  emb.offset = lo;
  emb.scale = (span / (hi - lo).array()).matrix();
  return emb;
}

HeatmapCell quantize(const Eigen::Vector2d& scaled, int m) {
  const auto axis = [m](double v) {
    const double r = std::floor(v + 0.5);
    if (!(r >= 0.0)) return 0;  // also catches NaN
    return static_cast<int>(std::min(r, static_cast<double>(m - 1)));
  };
  return HeatmapCell{axis(scaled.x()), axis(scaled.y())};
}

Eigen::Vector2d transform_new_raw(const Embedding2D& emb, const Eigen::VectorXd& latent,
                                  bool refine) {
  const Eigen::Index n = emb.reference.rows();
  if (n == 0) throw DomainError("transform_new: empty reference set");
  if (latent.size() != emb.reference.cols()) throw ShapeError("transform_new: latent length");
  if (!latent.allFinite()) throw DomainError("transform_new: non-finite latent");
  const auto& h = emb.hyper;
  const Eigen::Index k = std::min<Eigen::Index>(std::max(1, h.transform_neighbors), n);

  Eigen::VectorXd d(n);
  for (Eigen::Index i = 0; i < n; ++i) d[i] = (emb.reference.row(i).transpose() - latent).squaredNorm();
  std::vector<Eigen::Index> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::partial_sort(idx.begin(), idx.begin() + k, idx.end(), [&](Eigen::Index a, Eigen::Index b) {
    return d[a] < d[b] || (d[a] == d[b] && a < b);
  });
  Eigen::VectorXd nd(k);
  for (Eigen::Index i = 0; i < k; ++i) nd[i] = d[idx[i]];
  const Eigen::VectorXd w =
      calibrated_affinities(nd, std::min(h.transform_perplexity, static_cast<double>(k)));

  Eigen::Vector2d y = Eigen::Vector2d::Zero();
  for (Eigen::Index i = 0; i < k; ++i) y += w[i] * emb.points.row(idx[i]).transpose();
  if (!refine) return y;

  // Gradient descent on sum_j p_j log(p_j / q_j) with p supported on the k
  // neighbors and q the Student-t similarities to every reference point.
  for (int step = 0; step < h.transform_steps; ++step) {
    double qsum = 0.0;
    Eigen::VectorXd num(n);
    for (Eigen::Index j = 0; j < n; ++j) {
      num[j] = 1.0 / (1.0 + (y - emb.points.row(j).transpose()).squaredNorm());
      qsum += num[j];
    }
    Eigen::Vector2d grad = Eigen::Vector2d::Zero();
    for (Eigen::Index j = 0; j < n; ++j) {
      grad -= (num[j] / qsum) * num[j] * (y - emb.points.row(j).transpose());
    }
    for (Eigen::Index i = 0; i < k; ++i) {
      const Eigen::Index j = idx[i];
      grad += w[i] * num[j] * (y - emb.points.row(j).transpose());
    }
    y -= h.transform_learning_rate * 4.0 * grad;
  }
  return y;
}

Eigen::Vector2d transform_new(const Embedding2D& emb, const Eigen::VectorXd& latent) {
  return emb.to_heatmap(transform_new_raw(emb, latent, true));
}

std::vector<DensityRow> export_density(const Eigen::MatrixXd& points,
                                       const std::vector<std::string>& labels) {
  if (points.cols() != 2) throw ShapeError("export_density: points must be N x 2");
  if (static_cast<Eigen::Index>(labels.size()) != points.rows()) {
    throw ShapeError("export_density: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(points.rows()) + " points");
  }
  std::vector<DensityRow> rows;
  rows.reserve(labels.size());
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    rows.push_back({points(i, 0), points(i, 1), labels[i]});
  }
  return rows;
}

std::vector<DensityRow> export_density(const Embedding2D& emb,
                                       const std::vector<std::string>& labels) {
  return export_density(emb.is_scaled() ? emb.scaled_points() : emb.points, labels);
}

std::string density_tsv(const std::vector<DensityRow>& rows) {
  std::string out = "x\ty\tgroup\n";
  char buf[128];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.6f\t%.6f\t", r.x, r.y);
    out += buf;
    out += r.group;
    out += '\n';
  }
  return out;
}

}  // namespace motionmap
