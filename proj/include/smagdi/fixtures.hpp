#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/dataset.hpp"
#include "smagdi/distill.hpp"

namespace smagdi::fixtures {

// Substring-rule scripted language model: the inference-side test double.
// generate() returns the text of the first rule whose needle occurs in the
// prompt; forward() is unsupported (not trainable).
class ScriptedLM : public distill::CausalLM {
 public:
  void add_rule(std::string needle, std::string text);
  void set_default_text(std::string text) { default_text_ = std::move(text); }
  // The next n generate() calls throw (exercises retry/ABSTAIN paths).
  void fail_next(int n) { fail_remaining_ = n; }
  int calls() const { return calls_; }

  int vocab_size() const override { return 258; }
  int hidden_dim() const override { return 8; }
  int max_context() const override { return 4096; }
  int bos_token() const override { return 256; }
  int eos_token() const override { return 257; }
  std::vector<int> tokenize(const std::string& text) const override;
  bool trainable() const override { return false; }
  void register_params(nn::ParamSet&) override {}
  std::size_t num_params() const override { return 0; }
  Bound bind(nn::Tape&, bool) override { return {}; }
  Output forward(nn::Tape&, const Bound&, std::span<const int>) override;
  std::string generate(const std::string& prompt, int max_tokens, double temperature,
                       std::uint64_t seed = 0) override;

 private:
  std::vector<std::pair<std::string, std::string>> rules_;
  std::string default_text_;
  int fail_remaining_{0};
  int calls_{0};
};

struct FixtureSpec {
  int num_questions{24};
  std::uint64_t seed{42};
};

// Deterministic desk-scale corpus: boolean questions plus a mock-backend
// script producing a mix of round-1 consensus, late consensus, and
// vote-decided debates, with decompose/solve synthesis and SAS entries.
struct Fixture {
  std::vector<harness::QuestionRecord> questions;
  nlohmann::json mock_script;
};

Fixture make_debate_fixture(const FixtureSpec& spec);

// StrategyQA-shaped JSONL ({qid, question, answer} per line).
void write_strategyqa_jsonl(const std::string& path,
                            const std::vector<harness::QuestionRecord>& questions);
void write_json(const std::string& path, const nlohmann::json& j);

}  // namespace smagdi::fixtures
