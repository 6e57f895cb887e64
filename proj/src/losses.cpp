#include "smagdi/losses.hpp"

#include <cmath>
#include <string>

#include "smagdi/error.hpp"
#include "smagdi/kernels.hpp"

namespace smagdi::losses {
namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) {
  if (x > 0.0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log softmax denominator per row: max + log(sum exp(x - max)).
double log_sum_exp(const double* row, int n) {
  const double m = kernels::max_value(static_cast<std::size_t>(n), row);
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += std::exp(row[i] - m);
  return m + std::log(s);
}

int count_unmasked(std::span<const std::uint8_t> mask) {
  int n = 0;
  for (auto m : mask) n += m ? 1 : 0;
  return n;
}

}  // namespace

double lm_loss(const nn::Mat& token_logits, std::span<const int> targets,
               std::span<const std::uint8_t> target_mask) {
  const int t_len = token_logits.rows();
  const int vocab = token_logits.cols();
  if (static_cast<int>(targets.size()) != t_len ||
      static_cast<int>(target_mask.size()) != t_len) {
    throw ValidationError("lm_loss: targets/mask length must match logits rows");
  }
  const int supervised = count_unmasked(target_mask);
  if (supervised == 0) throw ValidationError("lm_loss: all positions masked out");

  double acc = 0.0;
  for (int t = 0; t < t_len; ++t) {
    if (!target_mask[t]) continue;
    const int y = targets[t];
    if (y < 0 || y >= vocab) throw ValidationError("lm_loss: target outside vocabulary");
    const double* row = token_logits.row_ptr(t);
    acc += log_sum_exp(row, vocab) - row[y];
  }
  return acc / supervised;
}

nn::Mat lm_loss_grad(const nn::Mat& token_logits, std::span<const int> targets,
                     std::span<const std::uint8_t> target_mask) {
  const int t_len = token_logits.rows();
  const int vocab = token_logits.cols();
  const int supervised = count_unmasked(target_mask);
  if (supervised == 0) throw ValidationError("lm_loss: all positions masked out");

  nn::Mat grad(t_len, vocab);
  const double inv = 1.0 / supervised;
  for (int t = 0; t < t_len; ++t) {
    if (!target_mask[t]) continue;
    const double* row = token_logits.row_ptr(t);
    double* grow = grad.row_ptr(t);
    const double lse = log_sum_exp(row, vocab);
    for (int v = 0; v < vocab; ++v) grow[v] = std::exp(row[v] - lse) * inv;
    grow[targets[t]] -= inv;
  }
  return grad;
}

double node_loss(std::span<const double> logits, std::span<const double> labels,
                 std::span<const std::uint8_t> mask, int num_graphs) {
  if (logits.size() != labels.size() || logits.size() != mask.size()) {
    throw ValidationError("node_loss: logits/labels/mask sizes differ");
  }
  if (num_graphs < 1) throw ValidationError("node_loss: num_graphs must be >= 1");
  if (count_unmasked(mask) == 0) throw ValidationError("node_loss: all nodes masked out");

  double acc = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    const double y = labels[i];
    if (y != 0.0 && y != 1.0) throw ValidationError("node_loss: labels must be 0 or 1");
    // -[y log sigma(h) + (1-y) log(1 - sigma(h))] = softplus(h) - y*h
    acc += softplus(logits[i]) - y * logits[i];
  }
  return acc / num_graphs;
}

std::vector<double> node_loss_grad(std::span<const double> logits,
                                   std::span<const double> labels,
                                   std::span<const std::uint8_t> mask, int num_graphs) {
  if (count_unmasked(mask) == 0) throw ValidationError("node_loss: all nodes masked out");
  std::vector<double> grad(logits.size(), 0.0);
  const double inv = 1.0 / num_graphs;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    if (!mask[i]) continue;
    grad[i] = (sigmoid(logits[i]) - labels[i]) * inv;
  }
  return grad;
}

double contrastive_loss(std::span<const double> s_pos, std::span<const double> s_neg) {
  if (s_pos.size() != s_neg.size()) {
    throw ValidationError("contrastive_loss: pair lists must have equal length");
  }
  if (s_pos.empty()) throw ValidationError("contrastive_loss: at least one pair required");
  double acc = 0.0;
  for (std::size_t i = 0; i < s_pos.size(); ++i) {
    const double h = 1.0 - s_pos[i] + s_neg[i];
    if (h > 0.0) acc += h;
  }
  return acc / static_cast<double>(s_pos.size());
}

void contrastive_loss_grad(std::span<const double> s_pos, std::span<const double> s_neg,
                           std::span<double> d_pos, std::span<double> d_neg) {
  const double inv = 1.0 / static_cast<double>(s_pos.size());
  for (std::size_t i = 0; i < s_pos.size(); ++i) {
    const bool active = (1.0 - s_pos[i] + s_neg[i]) > 0.0;
    d_pos[i] = active ? -inv : 0.0;
    d_neg[i] = active ? inv : 0.0;
  }
}

double alignment_loss(const nn::Mat& z_dec, const nn::Mat& z_sol) {
  if (!z_dec.same_shape(z_sol)) throw ValidationError("alignment_loss: shape mismatch");
  if (z_dec.rows() == 0) throw ValidationError("alignment_loss: empty batch");
  double acc = 0.0;
  for (std::size_t i = 0; i < z_dec.size(); ++i) {
    const double d = z_dec.flat()[i] - z_sol.flat()[i];
    acc += d * d;
  }
  return acc / z_dec.rows();
}

void alignment_loss_grad(const nn::Mat& z_dec, const nn::Mat& z_sol,
                         nn::Mat& d_dec, nn::Mat& d_sol) {
  d_dec = nn::Mat(z_dec.rows(), z_dec.cols());
  d_sol = nn::Mat(z_dec.rows(), z_dec.cols());
  const double scale = 2.0 / z_dec.rows();
  for (std::size_t i = 0; i < z_dec.size(); ++i) {
    const double g = scale * (z_dec.flat()[i] - z_sol.flat()[i]);
    d_dec.flat()[i] = g;
    d_sol.flat()[i] = -g;
  }
}

LossBundle total_loss(double lm, double node, double contrast, double align,
                      const LossCoefficients& coeff) {
  const struct {
    const char* name;
    double value;
  } components[] = {{"lm", lm}, {"node", node}, {"contrast", contrast}, {"align", align}};
  for (const auto& c : components) {
    if (std::isnan(c.value)) {
      throw NumericError(std::string("total_loss: component '") + c.name + "' is NaN");
    }
  }
  LossBundle b;
  b.lm = lm;
  b.node = node;
  b.contrast = contrast;
  b.align = align;
  b.total = coeff.alpha * lm + coeff.beta * node + coeff.gamma * contrast + coeff.delta * align;
  return b;
}

}  // namespace smagdi::losses
