#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/debate.hpp"

namespace smagdi::harness {

// ABSTAIN never matches, even against itself.
bool exact_match(const std::string& predicted, const std::string& gold);

struct PredictionPair {
  std::string predicted;
  std::string gold;
  std::string subject;  // optional, for per-subject breakdowns
};

double accuracy(const std::vector<PredictionPair>& pairs);

// Metrics report: {accuracy, n, per_subject?} as stable JSON.
nlohmann::json metrics_report(const std::vector<PredictionPair>& pairs,
                              const std::string& dataset_name);

struct CompareReport {
  double mas_accuracy{0.0};
  double sas_accuracy{0.0};
  int n{0};
  nlohmann::json per_question;  // array of {question_id, gold, mas, sas, decided_by}
};

nlohmann::json compare_report_to_json(const CompareReport& r);

// MAS arm: the full weighted debate. SAS arm: a single zero-shot
// chain-of-thought agent over the same questions.
CompareReport compare_mas_sas(const std::vector<QuestionRecord>& dataset,
                              const std::vector<agents::Persona>& roster,
                              agents::AgentBackend& backend, const debate::AgentWeights& weights,
                              const debate::DebateConfig& config);

// The single-agent prompt used by the SAS arm.
std::string sas_prompt(const QuestionRecord& question);

}  // namespace smagdi::harness
