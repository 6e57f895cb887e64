#pragma once

#include <functional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/dataset.hpp"
#include "smagdi/distill.hpp"
#include "smagdi/scot_prompts.hpp"

namespace smagdi::scot {

struct InferenceConfig {
  int max_depth{2};
  double temperature{0.0};
  int max_tokens{160};
};

struct InferenceTrace {
  std::string question_id;
  std::vector<std::string> decomposition;
  std::vector<std::string> sub_answers;
  std::string final_answer;
  int depth_used{0};
};

nlohmann::json trace_to_json(const InferenceTrace& t);
InferenceTrace trace_from_json(const nlohmann::json& j);

// Sub-answers that self-report this marker trigger one level of recursive
// decomposition (up to max_depth).
inline constexpr const char* kInsufficientMarker = "cannot be answered directly";

// Numbered sub-questions from the decomposer; {} marks the question atomic,
// un-numbered generations fall back to the question itself.
std::vector<std::string> decompose(distill::StudentUnit& student, const std::string& question,
                                   const InferenceConfig& config = {});

// Answers one sub-question given the accumulated (sub-question, answer)
// context; a failed generation retries once, then yields an ABSTAIN
// placeholder.
std::string solve_sub(distill::StudentUnit& student, const std::string& main_question,
                      const std::vector<std::pair<std::string, std::string>>& prior,
                      const std::string& sub_question, const InferenceConfig& config = {});

// Zero-shot Socratic inference: decompose, solve each sub-question in order,
// compose, and extract the terminal answer label.
InferenceTrace infer(distill::StudentUnit& student, const harness::QuestionRecord& question,
                     const InferenceConfig& config = {});

// Observer for every prompt infer() sends to the student (test hook for the
// zero-shot canary scan). Returns the previous observer.
using PromptObserver = std::function<void(const std::string&)>;
PromptObserver set_prompt_observer(PromptObserver observer);

}  // namespace smagdi::scot
