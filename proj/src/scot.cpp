#include "smagdi/scot.hpp"

#include <cctype>
#include <utility>

#include "smagdi/agents.hpp"
#include "smagdi/error.hpp"

namespace smagdi::scot {
namespace {

PromptObserver& observer_slot() {
  static PromptObserver observer;
  return observer;
}

std::string generate_observed(distill::CausalLM& lm, const std::string& prompt,
                              const InferenceConfig& config) {
  if (auto& obs = observer_slot()) obs(prompt);
  return lm.generate(prompt, config.max_tokens, config.temperature);
}

// One retry, then an ABSTAIN placeholder; inference must never crash on a
// failed generation.
std::string generate_with_retry(distill::CausalLM& lm, const std::string& prompt,
                                const InferenceConfig& config) {
  for (int attempt = 0; attempt < 2; ++attempt) {
    try {
      return generate_observed(lm, prompt, config);
    } catch (const std::exception&) {
      if (attempt == 1) break;
    }
  }
  return agents::kAbstain;
}

bool reports_insufficiency(const std::string& answer) {
  // Case-insensitive substring scan for the recursion marker.
  const std::string marker = kInsufficientMarker;
  if (answer.size() < marker.size()) return false;
  for (std::size_t i = 0; i + marker.size() <= answer.size(); ++i) {
    bool match = true;
    for (std::size_t j = 0; j < marker.size(); ++j) {
      if (std::tolower(static_cast<unsigned char>(answer[i + j])) !=
          std::tolower(static_cast<unsigned char>(marker[j]))) {
        match = false;
        break;
      }
    }
    if (match) return true;
  }
  return false;
}

// Depth-aware sub-question solving: a self-reported insufficient answer is
// re-derived from one nested decomposition when the budget allows.
std::string solve_with_depth(distill::StudentUnit& student, const std::string& main_question,
                             const std::vector<std::pair<std::string, std::string>>& prior,
                             const std::string& sub_question, int depth,
                             const InferenceConfig& config, int& depth_used) {
  depth_used = std::max(depth_used, depth);
  std::string answer = generate_with_retry(
      *student.solver, solver_prompt(main_question, prior, sub_question), config);

  if (reports_insufficiency(answer) && depth < config.max_depth) {
    const auto nested = decompose(student, sub_question, config);
    if (!nested.empty()) {
      std::vector<std::pair<std::string, std::string>> nested_prior;
      int nested_depth = depth_used;
      for (const auto& nq : nested) {
        nested_prior.emplace_back(
            nq, solve_with_depth(student, sub_question, nested_prior, nq, depth + 1, config,
                                 nested_depth));
      }
      depth_used = std::max(depth_used, nested_depth);
      // Compose the nested answers back into one sub-answer.
      answer = generate_with_retry(
          *student.solver, solver_prompt(sub_question, nested_prior, sub_question), config);
    }
  }
  return answer;
}

}  // namespace

PromptObserver set_prompt_observer(PromptObserver observer) {
  return std::exchange(observer_slot(), std::move(observer));
}

nlohmann::json trace_to_json(const InferenceTrace& t) {
  return {{"version", 1},
          {"question_id", t.question_id},
          {"decomposition", t.decomposition},
          {"sub_answers", t.sub_answers},
          {"final_answer", t.final_answer},
          {"depth_used", t.depth_used}};
}

InferenceTrace trace_from_json(const nlohmann::json& j) {
  for (const char* key :
       {"question_id", "decomposition", "sub_answers", "final_answer", "depth_used"}) {
    if (!j.contains(key)) throw ParseError("missing key", std::string("$.") + key);
  }
  InferenceTrace t;
  t.question_id = j.at("question_id").get<std::string>();
  t.decomposition = j.at("decomposition").get<std::vector<std::string>>();
  t.sub_answers = j.at("sub_answers").get<std::vector<std::string>>();
  t.final_answer = j.at("final_answer").get<std::string>();
  t.depth_used = j.at("depth_used").get<int>();
  return t;
}

std::vector<std::string> decompose(distill::StudentUnit& student, const std::string& question,
                                   const InferenceConfig& config) {
  const std::string generation =
      generate_with_retry(*student.decomposer, decomposer_prompt(question), config);
  std::string trimmed = generation;
  while (!trimmed.empty() && std::isspace(static_cast<unsigned char>(trimmed.back()))) {
    trimmed.pop_back();
  }
  std::size_t b = 0;
  while (b < trimmed.size() && std::isspace(static_cast<unsigned char>(trimmed[b]))) ++b;
  trimmed = trimmed.substr(b);

  if (trimmed.empty()) return {};  // atomic question
  auto items = parse_numbered_list(trimmed);
  if (items.empty()) return {question};  // unparseable generation: fall back
  return items;
}

std::string solve_sub(distill::StudentUnit& student, const std::string& main_question,
                      const std::vector<std::pair<std::string, std::string>>& prior,
                      const std::string& sub_question, const InferenceConfig& config) {
  return generate_with_retry(*student.solver, solver_prompt(main_question, prior, sub_question),
                             config);
}

InferenceTrace infer(distill::StudentUnit& student, const harness::QuestionRecord& question,
                     const InferenceConfig& config) {
  InferenceTrace trace;
  trace.question_id = question.question_id;

  trace.decomposition = decompose(student, question.text, config);
  std::string final_text;
  if (trace.decomposition.empty()) {
    // Atomic: the solver answers directly.
    final_text = generate_with_retry(*student.solver,
                                     direct_prompt(question.text, question.answer_space), config);
    trace.depth_used = 0;
  } else {
    int depth_used = 1;
    std::vector<std::pair<std::string, std::string>> answered;
    for (const auto& sq : trace.decomposition) {
      const std::string answer =
          solve_with_depth(student, question.text, answered, sq, 1, config, depth_used);
      answered.emplace_back(sq, answer);
      trace.sub_answers.push_back(answer);
    }
    trace.depth_used = depth_used;
    final_text = generate_with_retry(
        *student.solver, compose_prompt(question.text, answered, question.answer_space), config);
  }
  trace.final_answer = agents::extract_answer(final_text, question.answer_space);
  return trace;
}

}  // namespace smagdi::scot
