// Copyright 2026 The MotionMap Authors
// SPDX-License-Identifier: Apache-2.0

#include "motionmap/nn/tape.hpp"

#include <algorithm>
#include <cmath>

#include "motionmap/error.hpp"

namespace motionmap::nn {
namespace {

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ShapeError(std::string(op) + ": shape (" + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ") vs (" + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + ")");
  }
}

Matrix sigmoid_of(const Matrix& x) {
  return x.unaryExpr([](double v) {
    // Split by sign so exp never overflows.
    if (v >= 0.0) return 1.0 / (1.0 + std::exp(-v));
    const double e = std::exp(v);
    return e / (1.0 + e);
  });
}

}  // namespace

Var Tape::push(Matrix value, std::function<void(Tape&, int)> backward) {
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(backward), {}});
  return Var{static_cast<int>(nodes_.size()) - 1};
}

void Tape::accumulate(int id, const Matrix& grad) {
  Node& n = nodes_[id];
  if (n.grad.size() == 0) {
    n.grad = grad;
  } else {
    n.grad += grad;
  }
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_[v.id];
  if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
  return n.grad;
}

Var Tape::constant(Matrix value) {
  if (!value.allFinite()) throw DomainError("Tape::constant: non-finite input");
  return push(std::move(value));
}

Var Tape::parameter(const ParameterStore& store, const std::string& name) {
  if (auto it = params_.find(name); it != params_.end()) return Var{it->second};
  Var v = push(store.at(name));
  nodes_[v.id].param_name = name;
  params_.emplace(name, v.id);
  return v;
}

Var Tape::matmul(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.rows()) {
    throw ShapeError("matmul: (" + std::to_string(av.rows()) + "x" + std::to_string(av.cols()) +
                     ") * (" + std::to_string(bv.rows()) + "x" + std::to_string(bv.cols()) + ")");
  }
  return push(av * bv, [a, b](Tape& t, int self) {
    const Matrix& go = t.g(self);
    t.accumulate(a.id, go * t.value(b).transpose());
    t.accumulate(b.id, t.value(a).transpose() * go);
  });
}

Var Tape::add(Var a, Var b) {
  require_same_shape(value(a), value(b), "add");
  return push(value(a) + value(b), [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.g(self));
    t.accumulate(b.id, t.g(self));
  });
}

Var Tape::sub(Var a, Var b) {
  require_same_shape(value(a), value(b), "sub");
  return push(value(a) - value(b), [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.g(self));
    t.accumulate(b.id, -t.g(self));
  });
}

Var Tape::mul(Var a, Var b) {
  require_same_shape(value(a), value(b), "mul");
  return push(value(a).cwiseProduct(value(b)), [a, b](Tape& t, int self) {
    t.accumulate(a.id, t.g(self).cwiseProduct(t.value(b)));
    t.accumulate(b.id, t.g(self).cwiseProduct(t.value(a)));
  });
}

Var Tape::scale(Var a, double s) {
  return push(value(a) * s, [a, s](Tape& t, int self) { t.accumulate(a.id, t.g(self) * s); });
}

Var Tape::add_bias(Var x, Var bias) {
  const Matrix& bv = value(bias);
  if (bv.cols() != 1 || bv.rows() != value(x).rows()) throw ShapeError("add_bias: bias shape");
  Matrix out = value(x);
  out.colwise() += bv.col(0);
  return push(std::move(out), [x, bias](Tape& t, int self) {
    t.accumulate(x.id, t.g(self));
    t.accumulate(bias.id, t.g(self).rowwise().sum());
  });
}

Var Tape::affine(Var w, Var x, Var bias) { return add_bias(matmul(w, x), bias); }

Var Tape::sigmoid(Var a) {
  return push(sigmoid_of(value(a)), [a](Tape& t, int self) {
    const Matrix& y = t.value(Var{self});
    t.accumulate(a.id, t.g(self).cwiseProduct(y.cwiseProduct((1.0 - y.array()).matrix())));
  });
}

Var Tape::tanh(Var a) {
  return push(value(a).array().tanh().matrix(), [a](Tape& t, int self) {
    const Matrix& y = t.value(Var{self});
    t.accumulate(a.id, t.g(self).cwiseProduct((1.0 - y.array().square()).matrix()));
  });
}

Var Tape::elu(Var a) {
  Matrix y = value(a).unaryExpr([](double v) { return v > 0.0 ? v : std::expm1(v); });
  return push(std::move(y), [a](Tape& t, int self) {
    const Matrix& x = t.value(a);
    const Matrix& y = t.value(Var{self});
    Matrix d = x.binaryExpr(y, [](double xv, double yv) { return xv > 0.0 ? 1.0 : yv + 1.0; });
    t.accumulate(a.id, t.g(self).cwiseProduct(d));
  });
}

Var Tape::exp(Var a) {
  return push(value(a).array().exp().matrix(), [a](Tape& t, int self) {
    t.accumulate(a.id, t.g(self).cwiseProduct(t.value(Var{self})));
  });
}

Var Tape::clamp(Var a, double lo, double hi) {
  return push(value(a).cwiseMax(lo).cwiseMin(hi), [a, lo, hi](Tape& t, int self) {
    const Matrix& x = t.value(a);
    Matrix mask = x.unaryExpr([lo, hi](double v) { return (v >= lo && v <= hi) ? 1.0 : 0.0; });
    t.accumulate(a.id, t.g(self).cwiseProduct(mask));
  });
}

Var Tape::concat_rows(Var a, Var b) {
  const Matrix& av = value(a);
  const Matrix& bv = value(b);
  if (av.cols() != bv.cols()) throw ShapeError("concat_rows: column counts differ");
  Matrix out(av.rows() + bv.rows(), av.cols());
  out << av, bv;
  const auto ra = av.rows();
  const auto rb = bv.rows();
  return push(std::move(out), [a, b, ra, rb](Tape& t, int self) {
    t.accumulate(a.id, t.g(self).topRows(ra));
    t.accumulate(b.id, t.g(self).bottomRows(rb));
  });
}

Var Tape::slice_rows(Var a, int begin, int count) {
  const Matrix& av = value(a);
  if (begin < 0 || count < 0 || begin + count > av.rows()) throw ShapeError("slice_rows: range");
  return push(av.middleRows(begin, count), [a, begin, count](Tape& t, int self) {
    const Matrix& av = t.value(a);
    Matrix full = Matrix::Zero(av.rows(), av.cols());
    full.middleRows(begin, count) = t.g(self);
    t.accumulate(a.id, full);
  });
}

Var Tape::reshape(Var a, int rows, int cols) {
  const Matrix& av = value(a);
  if (static_cast<Eigen::Index>(rows) * cols != av.size()) throw ShapeError("reshape: size");
  Matrix out = Eigen::Map<const Matrix>(av.data(), rows, cols);
  const auto r0 = av.rows();
  const auto c0 = av.cols();
  return push(std::move(out), [a, r0, c0](Tape& t, int self) {
    t.accumulate(a.id, Eigen::Map<const Matrix>(t.g(self).data(), r0, c0));
  });
}

Var Tape::gru_cell(Var x, Var h, Var wi, Var wh, Var bi, Var bh) {
  const Matrix& xv = value(x);
  const Matrix& hv = value(h);
  const Matrix& wiv = value(wi);
  const Matrix& whv = value(wh);
  const Eigen::Index hidden = hv.rows();
  if (wiv.rows() != 3 * hidden || wiv.cols() != xv.rows() || whv.rows() != 3 * hidden ||
      whv.cols() != hidden || value(bi).rows() != 3 * hidden || value(bh).rows() != 3 * hidden ||
      xv.cols() != hv.cols()) {
    throw ShapeError("gru_cell: inconsistent shapes");
  }
  Matrix gi = wiv * xv;
  gi.colwise() += value(bi).col(0);
  Matrix gh = whv * hv;
  gh.colwise() += value(bh).col(0);

  Matrix r = sigmoid_of(gi.topRows(hidden) + gh.topRows(hidden));
  Matrix z = sigmoid_of(gi.middleRows(hidden, hidden) + gh.middleRows(hidden, hidden));
  Matrix hn = gh.bottomRows(hidden);
  Matrix n = (gi.bottomRows(hidden) + r.cwiseProduct(hn)).array().tanh().matrix();
  Matrix out = n + z.cwiseProduct(hv - n);

  return push(std::move(out), [x, h, wi, wh, bi, bh, hidden, r = std::move(r), z = std::move(z),
                               n = std::move(n), hn = std::move(hn)](Tape& t, int self) {
    const Matrix& go = t.g(self);
    const Matrix& hv = t.value(h);
    const auto batch = go.cols();
    Matrix dz = go.cwiseProduct(hv - n);
    Matrix dn = go.cwiseProduct((1.0 - z.array()).matrix());
    Matrix dn_pre = dn.cwiseProduct((1.0 - n.array().square()).matrix());
    Matrix dr_pre = dn_pre.cwiseProduct(hn).cwiseProduct(r.cwiseProduct((1.0 - r.array()).matrix()));
    Matrix dz_pre = dz.cwiseProduct(z.cwiseProduct((1.0 - z.array()).matrix()));

    Matrix dgi(3 * hidden, batch);
    dgi << dr_pre, dz_pre, dn_pre;
    Matrix dgh(3 * hidden, batch);
    dgh << dr_pre, dz_pre, dn_pre.cwiseProduct(r);

    t.accumulate(wi.id, dgi * t.value(x).transpose());
    t.accumulate(bi.id, dgi.rowwise().sum());
    t.accumulate(x.id, t.value(wi).transpose() * dgi);
    t.accumulate(wh.id, dgh * hv.transpose());
    t.accumulate(bh.id, dgh.rowwise().sum());
    Matrix dh = go.cwiseProduct(z);
    dh.noalias() += t.value(wh).transpose() * dgh;
    t.accumulate(h.id, dh);
  });
}

Var Tape::sum(Var a) {
  Matrix out(1, 1);
  out(0, 0) = value(a).sum();
  return push(std::move(out), [a](Tape& t, int self) {
    const Matrix& av = t.value(a);
    t.accumulate(a.id, Matrix::Constant(av.rows(), av.cols(), t.g(self)(0, 0)));
  });
}

Var Tape::mean(Var a) {
  const double count = static_cast<double>(value(a).size());
  return scale(sum(a), 1.0 / count);
}

Var Tape::gaussian_nll_sum(Var pred, const Matrix& target, Var logvar) {
  const Matrix& pv = value(pred);
  const Matrix& lv = value(logvar);
  require_same_shape(pv, target, "gaussian_nll_sum");
  if (pv.rows() != 3 * lv.rows() || pv.cols() != lv.cols()) {
    throw ShapeError("gaussian_nll_sum: log-variance must be (J x B) for (3J x B) poses");
  }
  const Eigen::Index joints = lv.rows();
  const Eigen::Index batch = lv.cols();
  const Matrix diff = pv - target;
  Matrix err(joints, batch);
  for (Eigen::Index b = 0; b < batch; ++b) {
    for (Eigen::Index j = 0; j < joints; ++j) err(j, b) = diff.col(b).segment(3 * j, 3).squaredNorm();
  }
  Matrix var = lv.array().exp().matrix().cwiseMax(kMinVariance).cwiseMin(kMaxVariance);
  Matrix out(1, 1);
  out(0, 0) = (err.cwiseQuotient(var) + var.array().log().matrix()).sum();

  return push(std::move(out), [pred, logvar, diff, err, var, joints, batch](Tape& t, int self) {
    const double go = t.g(self)(0, 0);
    Matrix dpred(3 * joints, batch);
    Matrix dlog(joints, batch);
    for (Eigen::Index b = 0; b < batch; ++b) {
      for (Eigen::Index j = 0; j < joints; ++j) {
        const double v = var(j, b);
        dpred.col(b).segment(3 * j, 3) = diff.col(b).segment(3 * j, 3) * (2.0 * go / v);
        // d/dlogvar (e / v + log v) = 1 - e / v when the clamp is inactive.
        const bool clamped = v <= kMinVariance || v >= kMaxVariance;
        dlog(j, b) = clamped ? 0.0 : go * (1.0 - err(j, b) / v);
      }
    }
    t.accumulate(pred.id, dpred);
    t.accumulate(logvar.id, dlog);
  });
}

Var Tape::weighted_bce_sum(Var prob, const Matrix& target, double w) {
  const Matrix& pv = value(prob);
  require_same_shape(pv, target, "weighted_bce_sum");
  const double lo = kMinProbability;
  const double hi = 1.0 - kMinProbability;
  const Matrix p = pv.cwiseMax(lo).cwiseMin(hi);
  Matrix out(1, 1);
  out(0, 0) = -(w * target.array() * p.array().log() +
                (1.0 - target.array()) * (1.0 - p.array()).log())
                   .sum();
  return push(std::move(out), [prob, target, w, lo, hi](Tape& t, int self) {
    const double go = t.g(self)(0, 0);
    const Matrix& raw = t.value(prob);
    Matrix d = raw.binaryExpr(target, [&](double pr, double tv) {
      if (pr < lo || pr > hi) return 0.0;
      return go * (-(w * tv / pr) + (1.0 - tv) / (1.0 - pr));
    });
    t.accumulate(prob.id, d);
  });
}

void Tape::backward(Var output, const Matrix& seed) {
  require_same_shape(value(output), seed, "backward seed");
  accumulate(output.id, seed);
  for (int id = output.id; id >= 0; --id) {
    Node& n = nodes_[id];
    if (n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, id);
  }
}

Gradients Tape::parameter_gradients() const {
  Gradients out;
  for (const auto& [name, id] : params_) out.emplace(name, grad(Var{id}));
  return out;
}

}  // namespace motionmap::nn
