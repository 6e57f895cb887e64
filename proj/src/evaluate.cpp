#include "smagdi/evaluate.hpp"

#include <sstream>

#include "smagdi/error.hpp"

namespace smagdi::harness {

bool exact_match(const std::string& predicted, const std::string& gold) {
  if (predicted == agents::kAbstain) return false;
  return predicted == gold;
}

double accuracy(const std::vector<PredictionPair>& pairs) {
  if (pairs.empty()) throw ValidationError("accuracy: empty prediction list");
  int hits = 0;
  for (const auto& p : pairs) hits += exact_match(p.predicted, p.gold) ? 1 : 0;
  return static_cast<double>(hits) / pairs.size();
}

nlohmann::json metrics_report(const std::vector<PredictionPair>& pairs,
                              const std::string& dataset_name) {
  nlohmann::json j;
  j["version"] = 1;
  j["dataset"] = dataset_name;
  j["n"] = pairs.size();
  j["accuracy"] = accuracy(pairs);

  std::map<std::string, std::pair<int, int>> by_subject;  // subject -> (hits, n)
  bool any_subject = false;
  for (const auto& p : pairs) {
    if (p.subject.empty()) continue;
    any_subject = true;
    auto& [hits, n] = by_subject[p.subject];
    hits += exact_match(p.predicted, p.gold) ? 1 : 0;
    n += 1;
  }
  if (any_subject) {
    nlohmann::json per_subject;
    for (const auto& [subject, counts] : by_subject) {
      per_subject[subject] = {{"accuracy", static_cast<double>(counts.first) / counts.second},
                              {"n", counts.second}};
    }
    j["per_subject"] = std::move(per_subject);
  }
  return j;
}

std::string sas_prompt(const QuestionRecord& question) {
  std::ostringstream options;
  for (std::size_t i = 0; i < question.answer_space.size(); ++i) {
    if (i > 0) options << " | ";
    options << question.answer_space[i];
  }
  std::ostringstream out;
  out << "You are an expert reasoning assistant. Your task is to answer questions with careful "
         "analysis. Question: "
      << question.text << "\n\n";
  out << "Instructions:\n";
  out << "1. Let's think step by step about this question\n";
  out << "2. Break down the key components and requirements\n";
  out << "3. Consider what knowledge is needed to answer this\n";
  out << "4. Apply logical reasoning to reach a conclusion\n";
  out << "5. State your final answer as \"Answer: <option>\" with options " << options.str()
      << "\n\n";
  out << "Analysis and Answer:";
  return out.str();
}

nlohmann::json compare_report_to_json(const CompareReport& r) {
  nlohmann::json j;
  j["version"] = 1;
  j["n"] = r.n;
  j["mas"] = {{"accuracy", r.mas_accuracy}};
  j["sas"] = {{"accuracy", r.sas_accuracy}};
  j["per_question"] = r.per_question;
  return j;
}

CompareReport compare_mas_sas(const std::vector<QuestionRecord>& dataset,
                              const std::vector<agents::Persona>& roster,
                              agents::AgentBackend& backend, const debate::AgentWeights& weights,
                              const debate::DebateConfig& config) {
  if (dataset.empty()) throw ValidationError("compare_mas_sas: empty dataset");

  CompareReport report;
  report.n = static_cast<int>(dataset.size());
  report.per_question = nlohmann::json::array();

  std::vector<PredictionPair> mas_pairs, sas_pairs;
  for (const auto& q : dataset) {
    const auto transcript = debate::run_debate(q, roster, backend, weights, config);

    agents::GenerateRequest sas_req;
    sas_req.prompt = sas_prompt(q);
    sas_req.temperature = config.base_temperature;
    sas_req.max_tokens = config.generate_max_tokens;
    sas_req.question_id = q.question_id;
    sas_req.agent_id = "SAS";
    sas_req.round = 1;
    sas_req.purpose = "sas";
    const std::string sas_text = backend.generate(sas_req);
    const std::string sas_answer = agents::extract_answer(sas_text, q.answer_space);

    mas_pairs.push_back({transcript.final_answer, q.gold, q.subject.value_or("")});
    sas_pairs.push_back({sas_answer, q.gold, q.subject.value_or("")});
    report.per_question.push_back(
        {{"question_id", q.question_id},
         {"gold", q.gold},
         {"mas", transcript.final_answer},
         {"sas", sas_answer},
         {"decided_by", debate::decision_method_name(transcript.decided_by)}});
  }
  report.mas_accuracy = accuracy(mas_pairs);
  report.sas_accuracy = accuracy(sas_pairs);
  return report;
}

}  // namespace smagdi::harness
