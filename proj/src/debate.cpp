#include "smagdi/debate.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>

#include "smagdi/error.hpp"

namespace smagdi::debate {

const char* decision_method_name(DecisionMethod m) {
  return m == DecisionMethod::kConsensus ? "CONSENSUS" : "WEIGHTED_VOTE";
}

DecisionMethod decision_method_from_name(const std::string& name) {
  if (name == "CONSENSUS") return DecisionMethod::kConsensus;
  if (name == "WEIGHTED_VOTE") return DecisionMethod::kWeightedVote;
  throw ValidationError("unknown decision method: " + name);
}

AgentWeights optimize_weights(const std::map<std::string, double>& accuracies, double epsilon) {
  if (accuracies.empty()) throw ValidationError("optimize_weights: empty accuracy map");
  if (accuracies.size() != static_cast<std::size_t>(agents::kRosterSize)) {
    throw ValidationError("optimize_weights: expected one accuracy per roster agent");
  }
  if (epsilon <= 0.0 || epsilon >= 1.0) {
    throw ValidationError("optimize_weights: epsilon must lie in (0, 1)");
  }

  AgentWeights w;
  w.epsilon = epsilon;
  double total = 0.0;
  for (const auto& [name, acc] : accuracies) {
    if (acc < 0.0 || acc > 1.0) {
      throw ValidationError("optimize_weights: accuracy for " + name + " outside [0, 1]");
    }
    const double raw = std::max(epsilon, acc);
    w.raw[name] = raw;
    total += raw;
  }
  for (const auto& [name, raw] : w.raw) w.normalized[name] = raw / total;
  return w;
}

AgentWeights calibrate(const std::vector<agents::Persona>& roster,
                       agents::AgentBackend& backend,
                       const std::vector<harness::QuestionRecord>& training_sample,
                       const DebateConfig& config) {
  if (training_sample.empty()) throw ValidationError("calibrate: empty training sample");

  std::map<std::string, double> accuracies;
  for (const auto& persona : roster) {
    int hits = 0;
    for (const auto& q : training_sample) {
      const auto r = agents::respond(persona, backend, q, {}, 1, config.base_temperature,
                                     "calibrate", config.generate_max_tokens);
      if (r.extracted_answer == q.gold) ++hits;
    }
    accuracies[persona.name] = static_cast<double>(hits) / training_sample.size();
  }
  return optimize_weights(accuracies, config.epsilon);
}

std::optional<std::string> check_consensus(const std::vector<agents::AgentResponse>& responses,
                                           const std::vector<agents::Persona>& roster) {
  if (responses.size() != roster.size()) {
    throw ValidationError("check_consensus: expected exactly one response per persona");
  }
  std::set<std::string> seen;
  for (const auto& r : responses) {
    if (!seen.insert(r.agent_id).second) {
      throw ValidationError("check_consensus: duplicate response for agent " + r.agent_id);
    }
  }

  std::optional<std::string> label;
  for (const auto& r : responses) {
    if (r.extracted_answer == agents::kAbstain) continue;
    if (!label.has_value()) {
      label = r.extracted_answer;
    } else if (*label != r.extracted_answer) {
      return std::nullopt;
    }
  }
  return label;  // nullopt when everyone abstained
}

std::string weighted_vote(const std::vector<agents::AgentResponse>& responses,
                          const AgentWeights& weights,
                          const std::vector<std::string>& answer_space) {
  std::map<std::string, double> score;
  bool any_vote = false;
  for (const auto& r : responses) {
    if (r.extracted_answer == agents::kAbstain) continue;
    const auto it = weights.normalized.find(r.agent_id);
    if (it == weights.normalized.end()) {
      throw ValidationError("weighted_vote: no weight for agent " + r.agent_id);
    }
    score[r.extracted_answer] += it->second;
    any_vote = true;
  }
  if (!any_vote) throw ValidationError("weighted_vote: all agents abstained, vote unresolvable");

  // Scan in answer-space order so exact ties resolve to the earlier label.
  std::string best;
  double best_score = -1.0;
  for (const auto& label : answer_space) {
    const auto it = score.find(label);
    const double s = it == score.end() ? 0.0 : it->second;
    if (s > best_score) {
      best_score = s;
      best = label;
    }
  }
  return best;
}

namespace {

std::vector<agents::AgentResponse> run_round(const harness::QuestionRecord& question,
                                             const std::vector<agents::Persona>& roster,
                                             agents::AgentBackend& backend,
                                             const AgentWeights& weights,
                                             const std::vector<agents::AgentResponse>& previous,
                                             int round, double temperature,
                                             const DebateConfig& config) {
  auto peers_for = [&](const agents::Persona& persona) {
    std::vector<agents::WeightedPeer> peers;
    if (round >= 2) {
      for (const auto& prev : previous) {
        if (prev.agent_id == persona.name) continue;
        const auto it = weights.normalized.find(prev.agent_id);
        peers.push_back({prev, it == weights.normalized.end() ? 0.0 : it->second});
      }
    }
    return peers;
  };

  std::vector<agents::AgentResponse> responses(roster.size());
  if (config.parallel_agents) {
    std::vector<std::future<agents::AgentResponse>> futures;
    futures.reserve(roster.size());
    for (const auto& persona : roster) {
      futures.push_back(std::async(std::launch::async, [&, persona] {
        return agents::respond(persona, backend, question, peers_for(persona), round,
                               temperature, "debate", config.generate_max_tokens);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) responses[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < roster.size(); ++i) {
      responses[i] = agents::respond(roster[i], backend, question, peers_for(roster[i]), round,
                                     temperature, "debate", config.generate_max_tokens);
    }
  }
  return responses;
}

}  // namespace

DebateTranscript run_debate(const harness::QuestionRecord& question,
                            const std::vector<agents::Persona>& roster,
                            agents::AgentBackend& backend, const AgentWeights& weights,
                            const DebateConfig& config) {
  if (config.max_rounds < 1) throw ValidationError("run_debate: max_rounds must be >= 1");
  if (config.temperature_increment < 0.0) {
    throw ValidationError("run_debate: temperature_increment must be >= 0");
  }
  double norm_total = 0.0;
  for (const auto& [_, v] : weights.normalized) norm_total += v;
  if (std::abs(norm_total - 1.0) > 1e-9) {
    throw ValidationError("run_debate: weights must be normalized to sum 1");
  }

  DebateTranscript t;
  t.question = question;
  const std::vector<agents::AgentResponse> no_previous;
  for (int round = 1; round <= config.max_rounds; ++round) {
    const double temperature =
        config.base_temperature + config.temperature_increment * (round - 1);
    const auto& previous = t.rounds.empty() ? no_previous : t.rounds.back();
    t.rounds.push_back(
        run_round(question, roster, backend, weights, previous, round, temperature, config));

    const auto consensus = check_consensus(t.rounds.back(), roster);
    if (consensus.has_value()) {
      t.final_answer = *consensus;
      t.consensus_reached = true;
      t.decided_by = DecisionMethod::kConsensus;
      return t;
    }
  }
  t.final_answer = weighted_vote(t.rounds.back(), weights, question.answer_space);
  t.consensus_reached = false;
  t.decided_by = DecisionMethod::kWeightedVote;
  return t;
}

nlohmann::json weights_to_json(const AgentWeights& w) {
  nlohmann::json j;
  j["version"] = 1;
  j["epsilon"] = w.epsilon;
  j["raw"] = w.raw;
  j["normalized"] = w.normalized;
  return j;
}

AgentWeights weights_from_json(const nlohmann::json& j) {
  AgentWeights w;
  if (!j.contains("raw")) throw ParseError("missing key", "$.raw");
  if (!j.contains("normalized")) throw ParseError("missing key", "$.normalized");
  w.epsilon = j.value("epsilon", 0.1);
  w.raw = j.at("raw").get<std::map<std::string, double>>();
  w.normalized = j.at("normalized").get<std::map<std::string, double>>();
  return w;
}

namespace {

nlohmann::json response_to_json(const agents::AgentResponse& r) {
  return {{"agent_id", r.agent_id},
          {"round", r.round},
          {"raw_text", r.raw_text},
          {"extracted_answer", r.extracted_answer},
          {"temperature", r.temperature}};
}

agents::AgentResponse response_from_json(const nlohmann::json& j, const std::string& path) {
  for (const char* key : {"agent_id", "round", "raw_text", "extracted_answer", "temperature"}) {
    if (!j.contains(key)) throw ParseError("missing key", path + "." + key);
  }
  agents::AgentResponse r;
  r.agent_id = j.at("agent_id").get<std::string>();
  r.round = j.at("round").get<int>();
  r.raw_text = j.at("raw_text").get<std::string>();
  r.extracted_answer = j.at("extracted_answer").get<std::string>();
  r.temperature = j.at("temperature").get<double>();
  return r;
}

}  // namespace

nlohmann::json transcript_to_json(const DebateTranscript& t) {
  nlohmann::json j;
  j["version"] = 1;
  j["question_id"] = t.question.question_id;
  j["question"] = t.question.text;
  j["answer_space"] = t.question.answer_space;
  j["gold"] = t.question.gold;
  if (t.question.subject.has_value()) j["subject"] = *t.question.subject;
  auto rounds = nlohmann::json::array();
  for (const auto& round : t.rounds) {
    auto rj = nlohmann::json::array();
    for (const auto& r : round) rj.push_back(response_to_json(r));
    rounds.push_back(std::move(rj));
  }
  j["rounds"] = std::move(rounds);
  j["final_answer"] = t.final_answer;
  j["consensus_reached"] = t.consensus_reached;
  j["decided_by"] = decision_method_name(t.decided_by);
  return j;
}

DebateTranscript transcript_from_json(const nlohmann::json& j) {
  for (const char* key : {"question_id", "question", "answer_space", "gold", "rounds",
                          "final_answer", "consensus_reached", "decided_by"}) {
    if (!j.contains(key)) throw ParseError("missing key", std::string("$.") + key);
  }
  DebateTranscript t;
  t.question.question_id = j.at("question_id").get<std::string>();
  t.question.text = j.at("question").get<std::string>();
  t.question.answer_space = j.at("answer_space").get<std::vector<std::string>>();
  t.question.gold = j.at("gold").get<std::string>();
  if (j.contains("subject")) t.question.subject = j.at("subject").get<std::string>();
  int ri = 0;
  for (const auto& round : j.at("rounds")) {
    std::vector<agents::AgentResponse> responses;
    int ci = 0;
    for (const auto& r : round) {
      responses.push_back(response_from_json(
          r, "$.rounds[" + std::to_string(ri) + "][" + std::to_string(ci) + "]"));
      ++ci;
    }
    t.rounds.push_back(std::move(responses));
    ++ri;
  }
  t.final_answer = j.at("final_answer").get<std::string>();
  t.consensus_reached = j.at("consensus_reached").get<bool>();
  t.decided_by = decision_method_from_name(j.at("decided_by").get<std::string>());
  return t;
}

}  // namespace smagdi::debate
