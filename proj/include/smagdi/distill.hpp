#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/agents.hpp"
#include "smagdi/autograd.hpp"
#include "smagdi/gcn.hpp"
#include "smagdi/graph.hpp"
#include "smagdi/losses.hpp"
#include "smagdi/optim.hpp"

namespace smagdi::distill {

enum class ExampleKind { kPositive, kNegative, kDecomposer, kSolver };

const char* example_kind_name(ExampleKind k);

struct TrainingExample {
  ExampleKind kind{ExampleKind::kPositive};
  std::string prompt;
  std::string completion;
  std::vector<int> source_node_ids;
  std::string question_id;
};

// POSITIVE: root-to-leaf paths whose RESPONSE nodes are all correct.
// NEGATIVE: paths whose terminal node is incorrect. DECOMPOSER/SOLVER:
// synthesized through the backend's decompose/solve prompts.
std::vector<TrainingExample> extract_examples(const graph::InteractionGraph& graph,
                                              agents::AgentBackend& backend);

// Root-to-leaf node-id paths in DFS order (shared with the extraction rule).
std::vector<std::vector<int>> enumerate_paths(const graph::InteractionGraph& graph);

// Autoregressive LM abstraction: the tiny reference transformer implements it
// for desk-scale runs; scripted stand-ins implement generate() only.
class CausalLM {
 public:
  struct Bound {
    std::vector<nn::Var> vars;  // aligned with register_params order
  };
  struct Output {
    nn::Var logits;  // [T x vocab]
    nn::Var hidden;  // [T x hidden_dim]
  };

  virtual ~CausalLM() = default;
  virtual int vocab_size() const = 0;
  virtual int hidden_dim() const = 0;
  virtual int max_context() const = 0;
  virtual int bos_token() const = 0;
  virtual int eos_token() const = 0;
  virtual std::vector<int> tokenize(const std::string& text) const = 0;
  virtual bool trainable() const = 0;
  virtual void register_params(nn::ParamSet& set) = 0;
  virtual std::size_t num_params() const = 0;
  virtual Bound bind(nn::Tape& tape, bool requires_grad) = 0;
  virtual Output forward(nn::Tape& tape, const Bound& bound, std::span<const int> tokens) = 0;
  virtual std::string generate(const std::string& prompt, int max_tokens, double temperature,
                               std::uint64_t seed = 0) = 0;
};

struct StudentConfig {
  int proj_dim{128};
  // Tiny reference transformer dimensions (see tiny_lm.hpp for the model).
  int lm_dim{32};
  int lm_heads{2};
  int lm_layers{2};
  int lm_block{384};

  nlohmann::json to_json() const;
  static StudentConfig from_json(const nlohmann::json& j);
};

// Decomposer LM + solver LM + projection heads into a shared space + the
// chain scorer over pooled solver hidden states. Trained jointly.
class StudentUnit {
 public:
  static StudentUnit build_tiny(const StudentConfig& config, std::uint64_t seed);
  // Wraps externally provided LMs (inference-only stand-ins keep heads off).
  static StudentUnit wrap(std::shared_ptr<CausalLM> decomposer,
                          std::shared_ptr<CausalLM> solver);

  std::shared_ptr<CausalLM> decomposer;
  std::shared_ptr<CausalLM> solver;
  nn::Mat proj_dec_w, proj_dec_b;
  nn::Mat proj_sol_w, proj_sol_b;
  nn::Mat scorer_w, scorer_b;
  StudentConfig config;
  bool has_heads{false};

  void register_params(nn::ParamSet& set);
  std::size_t num_params() const;
};

struct BoundStudent {
  CausalLM::Bound dec;
  CausalLM::Bound sol;
  nn::Var proj_dec_w, proj_dec_b, proj_sol_w, proj_sol_b, scorer_w, scorer_b;
};

BoundStudent bind_student(nn::Tape& tape, StudentUnit& student, bool requires_grad);

// Chain scorer: affine map over mean-pooled solver hidden states.
nn::Var score_chain_var(nn::Tape& tape, StudentUnit& student, const BoundStudent& bound,
                        const std::string& chain_text);
double score_chain(StudentUnit& student, const std::string& chain_text);

// Tokenized (prompt, completion) pair: completion and EOS positions are
// supervised, prompt tokens are context only. Over-long prompts are truncated
// from the left so the completion always fits.
struct LMItem {
  std::vector<int> tokens;
  std::vector<int> targets;
  std::vector<std::uint8_t> mask;
};
LMItem make_lm_item(const CausalLM& lm, const std::string& prompt,
                    const std::string& completion);

struct TrainConfig {
  double learning_rate{5e-5};
  int epochs{7};
  int early_stopping_patience{3};
  int batch_size{8};
  std::string checkpoint_dir;
  std::uint64_t seed{42};
  losses::LossCoefficients coefficients{};
  double validation_fraction{0.1};
  int contrast_pairs_per_step{4};
  int align_pairs_per_step{4};
  std::string resume_from;
};

struct EpochStats {
  int epoch{0};
  double lm{0.0};
  double node{0.0};
  double contrast{0.0};
  double align{0.0};
  double total{0.0};
  double val_total{0.0};
};

struct TrainResult {
  std::vector<EpochStats> history;
  double initial_total{0.0};
  double final_total{0.0};
  int best_epoch{-1};
  double best_val{std::numeric_limits<double>::infinity()};
  bool diverged{false};
  std::string best_checkpoint;
  std::string last_checkpoint;
};

nlohmann::json history_to_json(const TrainResult& result);

// Joint training on the composite objective. The backend synthesizes
// decomposer/solver examples during extraction.
TrainResult train(const std::vector<graph::InteractionGraph>& graphs, StudentUnit& student,
                  gcn::GCNParams& gcn_params, const TrainConfig& config,
                  agents::AgentBackend& backend);

// Checkpoint I/O for the full trainable state (student + heads + GCN).
void save_student_checkpoint(const std::string& path, StudentUnit& student,
                             gcn::GCNParams& gcn_params, const nlohmann::json& extra,
                             std::int64_t adam_steps);
nn::CheckpointInfo load_student_checkpoint(const std::string& path, StudentUnit& student,
                                           gcn::GCNParams& gcn_params);
// Rebuilds a tiny student + GCN with shapes recorded in the checkpoint.
std::pair<StudentUnit, gcn::GCNParams> student_from_checkpoint(const std::string& path);

}  // namespace smagdi::distill
