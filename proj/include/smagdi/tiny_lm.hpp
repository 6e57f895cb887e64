#pragma once

#include "smagdi/distill.hpp"

namespace smagdi::distill {

// Byte-level decoder-only transformer, small enough that a decomposer-solver
// pair plus heads stays under a couple hundred thousand parameters.
// Pre-norm blocks with per-head projection matrices, RMSNorm, ReLU MLP,
// no biases in the propagation path.
class TinyTransformerLM : public CausalLM {
 public:
  struct Config {
    int vocab{258};  // 256 bytes + BOS + EOS
    int dim{32};
    int heads{2};
    int layers{2};
    int block{384};
    int mlp_mult{4};
  };

  TinyTransformerLM(const Config& config, std::string name, std::uint64_t seed);
  TinyTransformerLM(const TinyTransformerLM&) = delete;
  TinyTransformerLM& operator=(const TinyTransformerLM&) = delete;

  int vocab_size() const override { return cfg_.vocab; }
  int hidden_dim() const override { return cfg_.dim; }
  int max_context() const override { return cfg_.block; }
  int bos_token() const override { return 256; }
  int eos_token() const override { return 257; }
  std::vector<int> tokenize(const std::string& text) const override;
  std::string detokenize(std::span<const int> tokens) const;
  bool trainable() const override { return true; }
  void register_params(nn::ParamSet& set) override;
  std::size_t num_params() const override;
  Bound bind(nn::Tape& tape, bool requires_grad) override;
  Output forward(nn::Tape& tape, const Bound& bound, std::span<const int> tokens) override;
  std::string generate(const std::string& prompt, int max_tokens, double temperature,
                       std::uint64_t seed = 0) override;

  const Config& config() const { return cfg_; }

 private:
  struct Layer {
    std::vector<nn::Mat> wq, wk, wv;  // per head [dim x head_dim]
    std::vector<nn::Mat> wo;          // per head [head_dim x dim]
    nn::Mat mlp_w1;                   // [dim x mlp_mult*dim]
    nn::Mat mlp_w2;                   // [mlp_mult*dim x dim]
  };

  Config cfg_;
  std::string name_;
  int head_dim_;
  nn::Mat tok_emb_;  // [vocab x dim]
  nn::Mat pos_emb_;  // [block x dim]
  nn::Mat head_;     // [dim x vocab]
  std::vector<Layer> layers_;
};

}  // namespace smagdi::distill
