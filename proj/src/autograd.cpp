#include "smagdi/autograd.hpp"

#include <cmath>

#include "smagdi/error.hpp"
#include "smagdi/kernels.hpp"
#include "smagdi/losses.hpp"

namespace smagdi::nn {
namespace {

void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}

}  // namespace

Var Tape::emplace(Mat value, bool requires_grad, std::function<void(Tape&)> back) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.back = std::move(back);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Mat& Tape::grad_mut(int idx) {
  Node& n = nodes_[idx];
  if (n.grad.empty() && !n.value.empty()) {
    n.grad = Mat(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

const Mat& Tape::grad(Var v) { return grad_mut(v.idx); }

Var Tape::input(Mat value, bool requires_grad) {
  return emplace(std::move(value), requires_grad, nullptr);
}

// Backward closures capture node indices, not references: nodes_ may
// reallocate as the tape grows.

Var Tape::matmul(Var a, Var b) {
  Mat out = nn::matmul(value(a), value(b));
  const bool rg = wants(a) || wants(b);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx, bi = b.idx;
    nodes_[si].back = [si, ai, bi](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      if (t.wants(Var{ai})) add_product_nt(t.grad_mut(ai), g, t.nodes_[bi].value);
      if (t.wants(Var{bi})) add_product_tn(t.grad_mut(bi), t.nodes_[ai].value, g);
    };
  }
  return self;
}

Var Tape::matmul_nt(Var a, Var b) {
  Mat out = nn::matmul_nt(value(a), value(b));
  const bool rg = wants(a) || wants(b);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx, bi = b.idx;
    nodes_[si].back = [si, ai, bi](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      if (t.wants(Var{ai})) add_product_nn(t.grad_mut(ai), g, t.nodes_[bi].value);
      if (t.wants(Var{bi})) add_product_tn(t.grad_mut(bi), g, t.nodes_[ai].value);
    };
  }
  return self;
}

Var Tape::add(Var a, Var b) {
  require(value(a).same_shape(value(b)), "add: shape mismatch");
  Mat out(value(a).rows(), value(a).cols());
  kernels::add(out.size(), value(a).data(), value(b).data(), out.data());
  const bool rg = wants(a) || wants(b);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx, bi = b.idx;
    nodes_[si].back = [si, ai, bi](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      if (t.wants(Var{ai})) add_inplace(t.grad_mut(ai), g);
      if (t.wants(Var{bi})) add_inplace(t.grad_mut(bi), g);
    };
  }
  return self;
}

Var Tape::add_rowvec(Var a, Var bias) {
  const Mat& av = value(a);
  const Mat& bv = value(bias);
  require(bv.rows() == 1 && bv.cols() == av.cols(), "add_rowvec: bias must be [1 x C]");
  Mat out = av;
  for (int r = 0; r < out.rows(); ++r) {
    kernels::add(out.cols(), out.row_ptr(r), bv.data(), out.row_ptr(r));
  }
  const bool rg = wants(a) || wants(bias);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx, bi = bias.idx;
    nodes_[si].back = [si, ai, bi](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      if (t.wants(Var{ai})) add_inplace(t.grad_mut(ai), g);
      if (t.wants(Var{bi})) {
        Mat& bg = t.grad_mut(bi);
        for (int r = 0; r < g.rows(); ++r) {
          kernels::add(g.cols(), bg.data(), g.row_ptr(r), bg.data());
        }
      }
    };
  }
  return self;
}

Var Tape::mul(Var a, Var b) {
  require(value(a).same_shape(value(b)), "mul: shape mismatch");
  Mat out(value(a).rows(), value(a).cols());
  kernels::mul(out.size(), value(a).data(), value(b).data(), out.data());
  const bool rg = wants(a) || wants(b);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx, bi = b.idx;
    nodes_[si].back = [si, ai, bi](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      if (t.wants(Var{ai})) {
        Mat tmp(g.rows(), g.cols());
        kernels::mul(g.size(), g.data(), t.nodes_[bi].value.data(), tmp.data());
        add_inplace(t.grad_mut(ai), tmp);
      }
      if (t.wants(Var{bi})) {
        Mat tmp(g.rows(), g.cols());
        kernels::mul(g.size(), g.data(), t.nodes_[ai].value.data(), tmp.data());
        add_inplace(t.grad_mut(bi), tmp);
      }
    };
  }
  return self;
}

Var Tape::scale(Var a, double s) {
  Mat out = value(a);
  kernels::scale_inplace(out.size(), s, out.data());
  const bool rg = wants(a);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx;
    nodes_[si].back = [si, ai, s](Tape& t) {
      axpy_inplace(t.grad_mut(ai), s, t.nodes_[si].grad);
    };
  }
  return self;
}

Var Tape::relu(Var a) {
  Mat out(value(a).rows(), value(a).cols());
  kernels::relu(out.size(), value(a).data(), out.data());
  const bool rg = wants(a);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx;
    nodes_[si].back = [si, ai](Tape& t) {
      kernels::relu_backward(t.nodes_[si].grad.size(), t.nodes_[ai].value.data(),
                             t.nodes_[si].grad.data(), t.grad_mut(ai).data());
    };
  }
  return self;
}

Var Tape::rmsnorm(Var a, double eps) {
  const Mat& x = value(a);
  Mat out(x.rows(), x.cols());
  std::vector<double> inv(x.rows());
  for (int r = 0; r < x.rows(); ++r) {
    const double ms = kernels::sum_squares(x.cols(), x.row_ptr(r)) / x.cols();
    inv[r] = 1.0 / std::sqrt(ms + eps);
    for (int c = 0; c < x.cols(); ++c) out(r, c) = x(r, c) * inv[r];
  }
  const bool rg = wants(a);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx;
    nodes_[si].back = [si, ai, inv = std::move(inv)](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      const Mat& x = t.nodes_[ai].value;
      Mat& gx = t.grad_mut(ai);
      const int cols = x.cols();
      for (int r = 0; r < x.rows(); ++r) {
        const double s = inv[r];
        const double gdotx = kernels::dot(cols, g.row_ptr(r), x.row_ptr(r));
        const double k = s * s * s * gdotx / cols;
        for (int c = 0; c < cols; ++c) {
          gx(r, c) += s * g(r, c) - k * x(r, c);
        }
      }
    };
  }
  return self;
}

Var Tape::softmax_rows(Var a, const Mat* additive_mask) {
  const Mat& x = value(a);
  if (additive_mask != nullptr) {
    require(additive_mask->same_shape(x), "softmax_rows: mask shape mismatch");
  }
  Mat out(x.rows(), x.cols());
  std::vector<double> scratch(x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    for (int c = 0; c < x.cols(); ++c) {
      scratch[c] = x(r, c) + (additive_mask ? (*additive_mask)(r, c) : 0.0);
    }
    const double m = kernels::max_value(scratch.size(), scratch.data());
    double z = 0.0;
    for (int c = 0; c < x.cols(); ++c) {
      // exp(u) for u < -40 is ~4e-18 of the max term: below double noise in
      // the normalized output, and it skips libm on hard-masked positions.
      const double u = scratch[c] - m;
      scratch[c] = u < -40.0 ? 0.0 : std::exp(u);
      z += scratch[c];
    }
    const double inv_z = 1.0 / z;
    for (int c = 0; c < x.cols(); ++c) out(r, c) = scratch[c] * inv_z;
  }
  const bool rg = wants(a);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx;
    nodes_[si].back = [si, ai](Tape& t) {
      const Mat& y = t.nodes_[si].value;
      const Mat& g = t.nodes_[si].grad;
      Mat& gx = t.grad_mut(ai);
      for (int r = 0; r < y.rows(); ++r) {
        const double dot = kernels::dot(y.cols(), g.row_ptr(r), y.row_ptr(r));
        for (int c = 0; c < y.cols(); ++c) {
          gx(r, c) += y(r, c) * (g(r, c) - dot);
        }
      }
    };
  }
  return self;
}

Var Tape::embed_rows(Var table, std::vector<int> ids) {
  const Mat& tab = value(table);
  Mat out(static_cast<int>(ids.size()), tab.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] >= 0 && ids[i] < tab.rows(), "embed_rows: id out of range");
    for (int c = 0; c < tab.cols(); ++c) out(static_cast<int>(i), c) = tab(ids[i], c);
  }
  const bool rg = wants(table);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ti = table.idx;
    nodes_[si].back = [si, ti, ids = std::move(ids)](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      Mat& gt = t.grad_mut(ti);
      for (std::size_t i = 0; i < ids.size(); ++i) {
        kernels::add(g.cols(), gt.row_ptr(ids[i]), g.row_ptr(static_cast<int>(i)),
                     gt.row_ptr(ids[i]));
      }
    };
  }
  return self;
}

Var Tape::mean_rows(Var a) {
  const Mat& x = value(a);
  require(x.rows() >= 1, "mean_rows: empty input");
  Mat out(1, x.cols());
  for (int r = 0; r < x.rows(); ++r) {
    kernels::add(x.cols(), out.data(), x.row_ptr(r), out.data());
  }
  kernels::scale_inplace(out.size(), 1.0 / x.rows(), out.data());
  const bool rg = wants(a);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx;
    nodes_[si].back = [si, ai](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      Mat& gx = t.grad_mut(ai);
      const double inv = 1.0 / gx.rows();
      for (int r = 0; r < gx.rows(); ++r) {
        kernels::axpy(gx.cols(), inv, g.data(), gx.row_ptr(r));
      }
    };
  }
  return self;
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  require(!parts.empty(), "concat_rows: no parts");
  const int cols = value(parts[0]).cols();
  int rows = 0;
  bool rg = false;
  for (Var p : parts) {
    require(value(p).cols() == cols, "concat_rows: column mismatch");
    rows += value(p).rows();
    rg = rg || wants(p);
  }
  Mat out(rows, cols);
  int at = 0;
  for (Var p : parts) {
    const Mat& v = value(p);
    for (int r = 0; r < v.rows(); ++r) {
      for (int c = 0; c < cols; ++c) out(at + r, c) = v(r, c);
    }
    at += v.rows();
  }
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx;
    std::vector<int> idxs;
    idxs.reserve(parts.size());
    for (Var p : parts) idxs.push_back(p.idx);
    nodes_[si].back = [si, idxs = std::move(idxs)](Tape& t) {
      const Mat& g = t.nodes_[si].grad;
      int at = 0;
      for (int pi : idxs) {
        const int part_rows = t.nodes_[pi].value.rows();
        if (t.wants(Var{pi})) {
          Mat& gp = t.grad_mut(pi);
          for (int r = 0; r < part_rows; ++r) {
            kernels::add(gp.cols(), gp.row_ptr(r), g.row_ptr(at + r), gp.row_ptr(r));
          }
        }
        at += part_rows;
      }
    };
  }
  return self;
}

Var Tape::cross_entropy_mean(Var logits, std::vector<int> targets,
                             std::vector<std::uint8_t> mask) {
  const double loss = losses::lm_loss(value(logits), targets, mask);
  Mat out(1, 1);
  out(0, 0) = loss;
  const bool rg = wants(logits);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, li = logits.idx;
    nodes_[si].back = [si, li, targets = std::move(targets), mask = std::move(mask)](Tape& t) {
      const double up = t.nodes_[si].grad(0, 0);
      Mat g = losses::lm_loss_grad(t.nodes_[li].value, targets, mask);
      axpy_inplace(t.grad_mut(li), up, g);
    };
  }
  return self;
}

Var Tape::bce_sum_div(Var logits, Mat labels, std::vector<std::uint8_t> mask, int num_graphs) {
  const Mat& lv = value(logits);
  require(labels.size() == lv.size() && mask.size() == lv.size(),
          "bce_sum_div: labels/mask size mismatch");
  const double loss = losses::node_loss(lv.flat(), labels.flat(), mask, num_graphs);
  Mat out(1, 1);
  out(0, 0) = loss;
  const bool rg = wants(logits);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, li = logits.idx;
    nodes_[si].back = [si, li, labels = std::move(labels), mask = std::move(mask),
                       num_graphs](Tape& t) {
      const double up = t.nodes_[si].grad(0, 0);
      const auto g = losses::node_loss_grad(t.nodes_[li].value.flat(), labels.flat(), mask,
                                            num_graphs);
      Mat& gl = t.grad_mut(li);
      kernels::axpy(g.size(), up, g.data(), gl.data());
    };
  }
  return self;
}

Var Tape::hinge_pairs_mean(Var pos, Var neg) {
  const Mat& p = value(pos);
  const Mat& n = value(neg);
  require(p.cols() == 1 && n.cols() == 1 && p.rows() == n.rows(),
          "hinge_pairs_mean: expects matching [N x 1] score columns");
  const double loss = losses::contrastive_loss(p.flat(), n.flat());
  Mat out(1, 1);
  out(0, 0) = loss;
  const bool rg = wants(pos) || wants(neg);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, pi = pos.idx, ni = neg.idx;
    nodes_[si].back = [si, pi, ni](Tape& t) {
      const double up = t.nodes_[si].grad(0, 0);
      const Mat& p = t.nodes_[pi].value;
      const Mat& n = t.nodes_[ni].value;
      std::vector<double> dp(p.size()), dn(n.size());
      losses::contrastive_loss_grad(p.flat(), n.flat(), dp, dn);
      if (t.wants(Var{pi})) kernels::axpy(dp.size(), up, dp.data(), t.grad_mut(pi).data());
      if (t.wants(Var{ni})) kernels::axpy(dn.size(), up, dn.data(), t.grad_mut(ni).data());
    };
  }
  return self;
}

Var Tape::mse_mean_rows(Var a, Var b) {
  const double loss = losses::alignment_loss(value(a), value(b));
  Mat out(1, 1);
  out(0, 0) = loss;
  const bool rg = wants(a) || wants(b);
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx, ai = a.idx, bi = b.idx;
    nodes_[si].back = [si, ai, bi](Tape& t) {
      const double up = t.nodes_[si].grad(0, 0);
      Mat da, db;
      losses::alignment_loss_grad(t.nodes_[ai].value, t.nodes_[bi].value, da, db);
      if (t.wants(Var{ai})) axpy_inplace(t.grad_mut(ai), up, da);
      if (t.wants(Var{bi})) axpy_inplace(t.grad_mut(bi), up, db);
    };
  }
  return self;
}

Var Tape::weighted_sum(const std::vector<std::pair<double, Var>>& terms) {
  require(!terms.empty(), "weighted_sum: no terms");
  double total = 0.0;
  bool rg = false;
  for (const auto& [c, v] : terms) {
    require(value(v).rows() == 1 && value(v).cols() == 1, "weighted_sum: terms must be scalar");
    total += c * value(v)(0, 0);
    rg = rg || wants(v);
  }
  Mat out(1, 1);
  out(0, 0) = total;
  Var self = emplace(std::move(out), rg, nullptr);
  if (rg) {
    const int si = self.idx;
    std::vector<std::pair<double, int>> t2;
    t2.reserve(terms.size());
    for (const auto& [c, v] : terms) t2.emplace_back(c, v.idx);
    nodes_[si].back = [si, t2 = std::move(t2)](Tape& t) {
      const double up = t.nodes_[si].grad(0, 0);
      for (const auto& [c, vi] : t2) {
        if (t.wants(Var{vi})) t.grad_mut(vi)(0, 0) += c * up;
      }
    };
  }
  return self;
}

void Tape::backward(Var scalar_loss) {
  const Mat& lv = value(scalar_loss);
  require(lv.rows() == 1 && lv.cols() == 1, "backward: loss must be scalar");
  grad_mut(scalar_loss.idx)(0, 0) = 1.0;
  for (int i = scalar_loss.idx; i >= 0; --i) {
    Node& n = nodes_[i];
    if (!n.requires_grad || !n.back || n.grad.empty()) continue;
    n.back(*this);
  }
}

}  // namespace smagdi::nn
