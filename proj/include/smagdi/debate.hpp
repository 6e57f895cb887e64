#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/agents.hpp"
#include "smagdi/dataset.hpp"

namespace smagdi::debate {

// Per-agent influence. raw_i = max(epsilon, accuracy_i); normalized shares
// sum to 1 so every agent keeps a strictly positive floor of influence.
struct AgentWeights {
  std::map<std::string, double> raw;
  std::map<std::string, double> normalized;
  double epsilon{0.1};
};

struct DebateConfig {
  int max_rounds{3};
  double base_temperature{0.7};
  double temperature_increment{0.1};
  double epsilon{0.1};
  int calibration_size{50};
  int generate_max_tokens{512};
  bool parallel_agents{false};
};

enum class DecisionMethod { kConsensus, kWeightedVote };

const char* decision_method_name(DecisionMethod m);
DecisionMethod decision_method_from_name(const std::string& name);

struct DebateTranscript {
  harness::QuestionRecord question;
  // rounds[r] holds exactly one response per persona, in roster order.
  std::vector<std::vector<agents::AgentResponse>> rounds;
  std::string final_answer;
  bool consensus_reached{false};
  DecisionMethod decided_by{DecisionMethod::kWeightedVote};
};

// w_i = max(epsilon, accuracy_i), normalized to sum 1.
AgentWeights optimize_weights(const std::map<std::string, double>& accuracies,
                              double epsilon = 0.1);

// Single-shot round-1 answering over the sample, once per agent, before any
// debate; accuracies feed optimize_weights.
AgentWeights calibrate(const std::vector<agents::Persona>& roster,
                       agents::AgentBackend& backend,
                       const std::vector<harness::QuestionRecord>& training_sample,
                       const DebateConfig& config = {});

// The common label when all non-abstaining agents agree (and at least one
// answered); nullopt otherwise. Expects exactly one response per persona.
std::optional<std::string> check_consensus(const std::vector<agents::AgentResponse>& responses,
                                           const std::vector<agents::Persona>& roster);

// Argmax over labels of summed normalized weights; ties break toward the
// earlier label in the answer space. All-abstain rounds are unresolvable.
std::string weighted_vote(const std::vector<agents::AgentResponse>& responses,
                          const AgentWeights& weights,
                          const std::vector<std::string>& answer_space);

// Layered consensus loop: round r runs at base + increment*(r-1); exits at
// the first unanimous round or votes after max_rounds.
DebateTranscript run_debate(const harness::QuestionRecord& question,
                            const std::vector<agents::Persona>& roster,
                            agents::AgentBackend& backend, const AgentWeights& weights,
                            const DebateConfig& config);

nlohmann::json weights_to_json(const AgentWeights& w);
AgentWeights weights_from_json(const nlohmann::json& j);
nlohmann::json transcript_to_json(const DebateTranscript& t);
DebateTranscript transcript_from_json(const nlohmann::json& j);

}  // namespace smagdi::debate
