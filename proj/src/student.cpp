#include <cmath>

#include "smagdi/distill.hpp"
#include "smagdi/error.hpp"
#include "smagdi/rng.hpp"
#include "smagdi/tiny_lm.hpp"

namespace smagdi::distill {

nlohmann::json StudentConfig::to_json() const {
  return {{"proj_dim", proj_dim}, {"lm_dim", lm_dim},     {"lm_heads", lm_heads},
          {"lm_layers", lm_layers}, {"lm_block", lm_block}};
}

StudentConfig StudentConfig::from_json(const nlohmann::json& j) {
  StudentConfig c;
  c.proj_dim = j.value("proj_dim", c.proj_dim);
  c.lm_dim = j.value("lm_dim", c.lm_dim);
  c.lm_heads = j.value("lm_heads", c.lm_heads);
  c.lm_layers = j.value("lm_layers", c.lm_layers);
  c.lm_block = j.value("lm_block", c.lm_block);
  return c;
}

StudentUnit StudentUnit::build_tiny(const StudentConfig& config, std::uint64_t seed) {
  TinyTransformerLM::Config lm_cfg;
  lm_cfg.dim = config.lm_dim;
  lm_cfg.heads = config.lm_heads;
  lm_cfg.layers = config.lm_layers;
  lm_cfg.block = config.lm_block;

  StudentUnit s;
  s.config = config;
  s.decomposer = std::make_shared<TinyTransformerLM>(lm_cfg, "dec", seed ^ 0xDECULL);
  s.solver = std::make_shared<TinyTransformerLM>(lm_cfg, "sol", seed ^ 0x501ULL);

  SplitMix64 rng(seed ^ 0x4ead5ULL);
  const double std_dev = 1.0 / std::sqrt(static_cast<double>(config.lm_dim));
  s.proj_dec_w = nn::Mat::gaussian(config.lm_dim, config.proj_dim, rng, std_dev);
  s.proj_dec_b = nn::Mat(1, config.proj_dim);
  s.proj_sol_w = nn::Mat::gaussian(config.lm_dim, config.proj_dim, rng, std_dev);
  s.proj_sol_b = nn::Mat(1, config.proj_dim);
  s.scorer_w = nn::Mat::gaussian(config.lm_dim, 1, rng, std_dev);
  s.scorer_b = nn::Mat(1, 1);
  s.has_heads = true;
  return s;
}

StudentUnit StudentUnit::wrap(std::shared_ptr<CausalLM> decomposer,
                              std::shared_ptr<CausalLM> solver) {
  StudentUnit s;
  s.decomposer = std::move(decomposer);
  s.solver = std::move(solver);
  s.has_heads = false;
  return s;
}

void StudentUnit::register_params(nn::ParamSet& set) {
  if (decomposer->trainable()) decomposer->register_params(set);
  if (solver->trainable()) solver->register_params(set);
  if (has_heads) {
    set.add("heads.proj_dec_w", &proj_dec_w);
    set.add("heads.proj_dec_b", &proj_dec_b);
    set.add("heads.proj_sol_w", &proj_sol_w);
    set.add("heads.proj_sol_b", &proj_sol_b);
    set.add("heads.scorer_w", &scorer_w);
    set.add("heads.scorer_b", &scorer_b);
  }
}

std::size_t StudentUnit::num_params() const {
  std::size_t n = decomposer->num_params() + solver->num_params();
  if (has_heads) {
    n += proj_dec_w.size() + proj_dec_b.size() + proj_sol_w.size() + proj_sol_b.size() +
         scorer_w.size() + scorer_b.size();
  }
  return n;
}

BoundStudent bind_student(nn::Tape& tape, StudentUnit& student, bool requires_grad) {
  if (!student.has_heads) {
    throw ValidationError("bind_student: student has no trainable heads (wrapped LMs)");
  }
  BoundStudent b;
  b.dec = student.decomposer->bind(tape, requires_grad);
  b.sol = student.solver->bind(tape, requires_grad);
  b.proj_dec_w = tape.input(student.proj_dec_w, requires_grad);
  b.proj_dec_b = tape.input(student.proj_dec_b, requires_grad);
  b.proj_sol_w = tape.input(student.proj_sol_w, requires_grad);
  b.proj_sol_b = tape.input(student.proj_sol_b, requires_grad);
  b.scorer_w = tape.input(student.scorer_w, requires_grad);
  b.scorer_b = tape.input(student.scorer_b, requires_grad);
  return b;
}

nn::Var score_chain_var(nn::Tape& tape, StudentUnit& student, const BoundStudent& bound,
                        const std::string& chain_text) {
  if (chain_text.empty()) throw ValidationError("score_chain: empty chain");
  std::vector<int> tokens = student.solver->tokenize(chain_text);
  if (tokens.empty()) throw ValidationError("score_chain: chain tokenizes to nothing");
  const int block = student.solver->max_context();
  if (static_cast<int>(tokens.size()) > block) {
    tokens.erase(tokens.begin(), tokens.end() - block);
  }
  const auto out = student.solver->forward(tape, bound.sol, tokens);
  nn::Var pooled = tape.mean_rows(out.hidden);
  return tape.add(tape.matmul(pooled, bound.scorer_w), bound.scorer_b);
}

double score_chain(StudentUnit& student, const std::string& chain_text) {
  nn::Tape tape;
  const auto bound = bind_student(tape, student, false);
  return tape.value(score_chain_var(tape, student, bound, chain_text))(0, 0);
}

LMItem make_lm_item(const CausalLM& lm, const std::string& prompt,
                    const std::string& completion) {
  std::vector<int> prompt_tokens = lm.tokenize(prompt);
  std::vector<int> completion_tokens = lm.tokenize(completion);
  if (completion_tokens.empty()) {
    throw ValidationError("make_lm_item: empty completion");
  }

  // Sequence: BOS, prompt, completion, EOS. Supervised targets are the
  // completion tokens and the EOS.
  const int block = lm.max_context();
  const int needed = 1 + static_cast<int>(prompt_tokens.size() + completion_tokens.size()) + 1;
  if (needed > block + 1) {
    // Drop from the left of the prompt; the completion must always fit.
    const int excess = needed - (block + 1);
    if (excess >= static_cast<int>(prompt_tokens.size())) {
      const int keep_completion = block - 1;  // BOS + completion + EOS
      prompt_tokens.clear();
      if (static_cast<int>(completion_tokens.size()) > keep_completion) {
        completion_tokens.resize(keep_completion);
      }
    } else {
      prompt_tokens.erase(prompt_tokens.begin(), prompt_tokens.begin() + excess);
    }
  }

  std::vector<int> seq;
  seq.push_back(lm.bos_token());
  seq.insert(seq.end(), prompt_tokens.begin(), prompt_tokens.end());
  const std::size_t completion_start = seq.size();
  seq.insert(seq.end(), completion_tokens.begin(), completion_tokens.end());
  seq.push_back(lm.eos_token());

  LMItem item;
  item.tokens.assign(seq.begin(), seq.end() - 1);
  item.targets.assign(seq.begin() + 1, seq.end());
  item.mask.assign(item.tokens.size(), 0);
  for (std::size_t t = 0; t + 1 < seq.size(); ++t) {
    if (t + 1 >= completion_start) item.mask[t] = 1;
  }
  return item;
}

void save_student_checkpoint(const std::string& path, StudentUnit& student,
                             gcn::GCNParams& gcn_params, const nlohmann::json& extra,
                             std::int64_t adam_steps) {
  nn::ParamSet set;
  student.register_params(set);
  gcn_params.register_params(set, "gcn");

  nlohmann::json full = extra;
  full["student"] = student.config.to_json();
  full["gcn"] = {{"input_dim", gcn_params.config.input_dim},
                 {"hidden_dim", gcn_params.config.hidden_dim},
                 {"num_layers", gcn_params.config.num_layers}};
  nn::save_checkpoint(path, set, full, adam_steps, true);
}

nn::CheckpointInfo load_student_checkpoint(const std::string& path, StudentUnit& student,
                                           gcn::GCNParams& gcn_params) {
  nn::ParamSet set;
  student.register_params(set);
  gcn_params.register_params(set, "gcn");
  return nn::load_checkpoint(path, set);
}

std::pair<StudentUnit, gcn::GCNParams> student_from_checkpoint(const std::string& path) {
  const auto extra = nn::peek_checkpoint_extra(path);
  const auto student_cfg = StudentConfig::from_json(extra.at("student"));
  gcn::GCNConfig gcn_cfg;
  gcn_cfg.input_dim = extra.at("gcn").at("input_dim").get<int>();
  gcn_cfg.hidden_dim = extra.at("gcn").at("hidden_dim").get<int>();
  gcn_cfg.num_layers = extra.at("gcn").at("num_layers").get<int>();

  StudentUnit student = StudentUnit::build_tiny(student_cfg, 0);
  SplitMix64 rng(0);
  gcn::GCNParams gcn_params = gcn::GCNParams::init(gcn_cfg, rng);
  load_student_checkpoint(path, student, gcn_params);
  return {std::move(student), std::move(gcn_params)};
}

}  // namespace smagdi::distill
