#pragma once

#include <vector>

#include "smagdi/autograd.hpp"
#include "smagdi/graph.hpp"
#include "smagdi/mat.hpp"
#include "smagdi/optim.hpp"
#include "smagdi/rng.hpp"

namespace smagdi::gcn {

struct GCNConfig {
  int input_dim{72};  // D_sem + k
  int hidden_dim{256};
  int num_layers{2};
};

// Propagation weights plus the scalar correctness classifier. Layer l maps
// hidden_{l} -> hidden_{l+1} through H' = relu(A_norm H W); the final
// propagation layer carries no activation.
struct GCNParams {
  GCNConfig config;
  std::vector<nn::Mat> layer_weights;
  nn::Mat classifier_w;  // [hidden_dim x 1]
  nn::Mat classifier_b;  // [1 x 1]

  static GCNParams init(const GCNConfig& config, SplitMix64& rng);
  void register_params(nn::ParamSet& set, const std::string& prefix);
};

// Per-graph node embeddings [max_nodes x hidden_dim]; padded rows are zero.
std::vector<nn::Mat> gcn_forward(const graph::GraphBatch& batch, const GCNParams& params);

// Pre-sigmoid correctness scores, flattened [batch_size * max_nodes];
// padding positions are zeroed.
std::vector<double> node_logits(const std::vector<nn::Mat>& embeddings, const GCNParams& params,
                                const graph::GraphBatch& batch);

// Tape-based twin of gcn_forward + node_logits + node loss, used in training.
// param_vars aligns with {layer_weights..., classifier_w, classifier_b}.
nn::Var gcn_node_loss(nn::Tape& tape, const graph::GraphBatch& batch,
                      const std::vector<nn::Var>& param_vars, const GCNConfig& config);

std::vector<nn::Var> gcn_param_vars(nn::Tape& tape, GCNParams& params, bool requires_grad);

}  // namespace smagdi::gcn
