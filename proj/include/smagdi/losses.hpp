#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smagdi/mat.hpp"

namespace smagdi::losses {

// Weights of the composite objective. Defaults follow the reference setting
// alpha/beta/gamma/delta = 1.0/1.0/0.1/0.5.
struct LossCoefficients {
  double alpha{1.0};
  double beta{1.0};
  double gamma{0.1};
  double delta{0.5};
};

struct LossBundle {
  double lm{0.0};
  double node{0.0};
  double contrast{0.0};
  double align{0.0};
  double total{0.0};
};

// Causal cross-entropy, averaged over unmasked positions.
// token_logits: [T x V]; targets: [T]; target_mask: [T] (nonzero = supervised).
double lm_loss(const nn::Mat& token_logits, std::span<const int> targets,
               std::span<const std::uint8_t> target_mask);
// d(loss)/d(logits), same shape as token_logits.
nn::Mat lm_loss_grad(const nn::Mat& token_logits, std::span<const int> targets,
                     std::span<const std::uint8_t> target_mask);

// Binary cross-entropy with logits, summed over unmasked nodes and divided by
// the number of graphs in the batch. Softplus-form, safe for large |logit|.
double node_loss(std::span<const double> logits, std::span<const double> labels,
                 std::span<const std::uint8_t> mask, int num_graphs);
std::vector<double> node_loss_grad(std::span<const double> logits,
                                   std::span<const double> labels,
                                   std::span<const std::uint8_t> mask, int num_graphs);

// Mean hinge with margin 1 over (positive, negative) score pairs.
double contrastive_loss(std::span<const double> s_pos, std::span<const double> s_neg);
void contrastive_loss_grad(std::span<const double> s_pos, std::span<const double> s_neg,
                           std::span<double> d_pos, std::span<double> d_neg);

// Mean over rows of the squared L2 distance between paired embeddings.
double alignment_loss(const nn::Mat& z_dec, const nn::Mat& z_sol);
void alignment_loss_grad(const nn::Mat& z_dec, const nn::Mat& z_sol,
                         nn::Mat& d_dec, nn::Mat& d_sol);

// total = alpha*lm + beta*node + gamma*contrast + delta*align.
// NaN components raise NumericError naming the offending component.
LossBundle total_loss(double lm, double node, double contrast, double align,
                      const LossCoefficients& coeff = {});

}  // namespace smagdi::losses
