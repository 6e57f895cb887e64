#include "smagdi/gcn.hpp"

#include <cmath>

#include "smagdi/error.hpp"
#include "smagdi/kernels.hpp"

namespace smagdi::gcn {

GCNParams GCNParams::init(const GCNConfig& config, SplitMix64& rng) {
  if (config.input_dim < 1 || config.hidden_dim < 1 || config.num_layers < 1) {
    throw ValidationError("GCNParams: dimensions and layer count must be positive");
  }
  GCNParams p;
  p.config = config;
  int in_dim = config.input_dim;
  for (int l = 0; l < config.num_layers; ++l) {
    const double std_dev = std::sqrt(2.0 / in_dim);
    p.layer_weights.push_back(nn::Mat::gaussian(in_dim, config.hidden_dim, rng, std_dev));
    in_dim = config.hidden_dim;
  }
  p.classifier_w = nn::Mat::gaussian(config.hidden_dim, 1, rng, std::sqrt(1.0 / config.hidden_dim));
  p.classifier_b = nn::Mat(1, 1);
  return p;
}

void GCNParams::register_params(nn::ParamSet& set, const std::string& prefix) {
  for (std::size_t l = 0; l < layer_weights.size(); ++l) {
    set.add(prefix + ".W" + std::to_string(l), &layer_weights[l]);
  }
  set.add(prefix + ".cls_w", &classifier_w);
  set.add(prefix + ".cls_b", &classifier_b);
}

namespace {

void validate_shapes(const graph::GraphBatch& batch, const GCNParams& params) {
  if (params.layer_weights.empty()) throw ValidationError("gcn: no layers");
  if (params.layer_weights.front().rows() != batch.feature_dim) {
    throw ValidationError("gcn: input dim " + std::to_string(batch.feature_dim) +
                          " does not match W0 rows " +
                          std::to_string(params.layer_weights.front().rows()));
  }
  for (std::size_t l = 1; l < params.layer_weights.size(); ++l) {
    if (params.layer_weights[l].rows() != params.layer_weights[l - 1].cols()) {
      throw ValidationError("gcn: layer weight shapes do not chain");
    }
  }
  if (params.classifier_w.rows() != params.layer_weights.back().cols()) {
    throw ValidationError("gcn: classifier does not match final hidden dim");
  }
}

}  // namespace

std::vector<nn::Mat> gcn_forward(const graph::GraphBatch& batch, const GCNParams& params) {
  validate_shapes(batch, params);
  std::vector<nn::Mat> out;
  out.reserve(batch.adjacency.size());
  for (int b = 0; b < batch.batch_size; ++b) {
    nn::Mat h = batch.node_features[b];
    for (std::size_t l = 0; l < params.layer_weights.size(); ++l) {
      nn::Mat propagated = nn::matmul(batch.adjacency[b], nn::matmul(h, params.layer_weights[l]));
      if (l + 1 < params.layer_weights.size()) {
        kernels::relu(propagated.size(), propagated.data(), propagated.data());
      }
      h = std::move(propagated);
    }
    out.push_back(std::move(h));
  }
  return out;
}

std::vector<double> node_logits(const std::vector<nn::Mat>& embeddings, const GCNParams& params,
                                const graph::GraphBatch& batch) {
  if (static_cast<int>(embeddings.size()) != batch.batch_size) {
    throw ValidationError("node_logits: embeddings do not match batch size");
  }
  std::vector<double> logits(static_cast<std::size_t>(batch.batch_size) * batch.max_nodes, 0.0);
  for (int b = 0; b < batch.batch_size; ++b) {
    const nn::Mat scores = nn::matmul(embeddings[b], params.classifier_w);
    for (int i = 0; i < batch.max_nodes; ++i) {
      if (!batch.node_mask[batch.flat_index(b, i)]) continue;
      logits[batch.flat_index(b, i)] = scores(i, 0) + params.classifier_b(0, 0);
    }
  }
  return logits;
}

std::vector<nn::Var> gcn_param_vars(nn::Tape& tape, GCNParams& params, bool requires_grad) {
  std::vector<nn::Var> vars;
  for (auto& w : params.layer_weights) vars.push_back(tape.input(w, requires_grad));
  vars.push_back(tape.input(params.classifier_w, requires_grad));
  vars.push_back(tape.input(params.classifier_b, requires_grad));
  return vars;
}

nn::Var gcn_node_loss(nn::Tape& tape, const graph::GraphBatch& batch,
                      const std::vector<nn::Var>& param_vars, const GCNConfig& config) {
  if (static_cast<int>(param_vars.size()) != config.num_layers + 2) {
    throw ValidationError("gcn_node_loss: param vars do not match config");
  }
  const nn::Var cls_w = param_vars[config.num_layers];
  const nn::Var cls_b = param_vars[config.num_layers + 1];

  std::vector<nn::Var> logit_parts;
  logit_parts.reserve(batch.batch_size);
  for (int b = 0; b < batch.batch_size; ++b) {
    nn::Var adj = tape.input(batch.adjacency[b]);
    nn::Var h = tape.input(batch.node_features[b]);
    for (int l = 0; l < config.num_layers; ++l) {
      h = tape.matmul(adj, tape.matmul(h, param_vars[l]));
      if (l + 1 < config.num_layers) h = tape.relu(h);
    }
    logit_parts.push_back(tape.add_rowvec(tape.matmul(h, cls_w), cls_b));
  }
  nn::Var logits = tape.concat_rows(logit_parts);  // [B*max_nodes x 1]

  nn::Mat labels(batch.batch_size * batch.max_nodes, 1);
  std::vector<std::uint8_t> mask(batch.label_mask.begin(), batch.label_mask.end());
  for (std::size_t i = 0; i < batch.labels.size(); ++i) {
    labels(static_cast<int>(i), 0) = batch.labels[i];
  }
  return tape.bce_sum_div(logits, std::move(labels), std::move(mask), batch.batch_size);
}

}  // namespace smagdi::gcn
