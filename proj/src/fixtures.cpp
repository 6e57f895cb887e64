#include "smagdi/fixtures.hpp"

#include <fstream>

#include "smagdi/agents.hpp"
#include "smagdi/error.hpp"
#include "smagdi/rng.hpp"

namespace smagdi::fixtures {

void ScriptedLM::add_rule(std::string needle, std::string text) {
  rules_.emplace_back(std::move(needle), std::move(text));
}

std::vector<int> ScriptedLM::tokenize(const std::string& text) const {
  std::vector<int> out;
  out.reserve(text.size());
  for (unsigned char c : text) out.push_back(static_cast<int>(c));
  return out;
}

distill::CausalLM::Output ScriptedLM::forward(nn::Tape&, const Bound&, std::span<const int>) {
  throw ValidationError("ScriptedLM has no trainable forward pass");
}

std::string ScriptedLM::generate(const std::string& prompt, int, double, std::uint64_t) {
  ++calls_;
  if (fail_remaining_ > 0) {
    --fail_remaining_;
    throw BackendError("scripted generation failure", true);
  }
  for (const auto& [needle, text] : rules_) {
    if (prompt.find(needle) != std::string::npos) return text;
  }
  return default_text_;
}

namespace {

const char* kTopics[] = {"glaciers", "harbors", "comets", "mosaics", "pendulums",
                         "aqueducts", "lanterns", "meridians", "canyons", "archives"};

std::string agent_text(const std::string& agent, int round, const std::string& answer,
                       const std::string& topic) {
  return agent + " r" + std::to_string(round) + ": the " + topic +
         " evidence points one way. Answer: " + answer;
}

}  // namespace

Fixture make_debate_fixture(const FixtureSpec& spec) {
  if (spec.num_questions < 1) throw ValidationError("make_debate_fixture: need >= 1 question");
  const auto& roster = agents::default_roster();
  SplitMix64 rng(spec.seed);

  Fixture fx;
  nlohmann::json responses = nlohmann::json::array();
  nlohmann::json synthesis = nlohmann::json::array();

  for (int qi = 0; qi < spec.num_questions; ++qi) {
    const std::string topic = kTopics[rng.next_below(std::size(kTopics))];
    const bool gold_true = rng.next_below(2) == 0;
    const std::string gold = gold_true ? "True" : "False";
    const std::string wrong = gold_true ? "False" : "True";

    harness::QuestionRecord q;
    q.question_id = "fx" + std::to_string(qi);
    q.text = "Do the " + topic + " records from site " + std::to_string(qi) +
             " support the claim?";
    q.answer_space = harness::boolean_answer_space();
    q.gold = gold;
    fx.questions.push_back(q);

    // Debate pattern cycle, biased toward short debates so chain pools stay
    // desk-scale (a 3-round graph alone contributes 125 root-to-leaf paths):
    // 0 = round-1 consensus, 1 = round-2 consensus after a 2/3 split,
    // 2 = three full rounds decided by weighted vote (positive and negative
    // chains for contrastive pairs).
    static const int kPatternCycle[8] = {0, 1, 0, 0, 2, 0, 1, 0};
    const int pattern = kPatternCycle[qi % 8];
    auto answer_of = [&](int agent, int round) -> std::string {
      switch (pattern) {
        case 0: return gold;
        case 1: return (round == 1 && agent != 0 && agent != 2) ? wrong : gold;
        default:
          if (round <= 2) return agent == 0 ? gold : wrong;
          return (agent == 0 || agent == 1 || agent == 3) ? gold : wrong;
      }
    };
    for (int round = 1; round <= 3; ++round) {
      for (std::size_t a = 0; a < roster.size(); ++a) {
        responses.push_back(
            {{"question_id", q.question_id},
             {"agent_id", roster[a].name},
             {"round", round},
             {"text", agent_text(roster[a].name, round,
                                 answer_of(static_cast<int>(a), round), topic)}});
      }
    }

    // SAS arm: correct on seven of each ten questions.
    responses.push_back({{"question_id", q.question_id},
                         {"agent_id", "SAS"},
                         {"round", 1},
                         {"text", "single-agent take on the " + topic +
                                      " question. Answer: " + (qi % 10 < 7 ? gold : wrong)}});

    // Decomposer/solver synthesis.
    const std::string decomposition = "1. What do the " + topic + " records actually say?\n2. " +
                                      "Is that consistent with the claim?\n3. So is the claim " +
                                      "true?";
    synthesis.push_back({{"question_id", q.question_id},
                         {"purpose", "decompose"},
                         {"index", 0},
                         {"text", decomposition}});
    const std::string solves[3] = {
        "The " + topic + " records favor the " + (gold_true ? "claim" : "opposite") + ".",
        "Yes, the reading is consistent across sources.",
        "So the claim is " + std::string(gold_true ? "supported" : "refuted") +
            ". Answer: " + gold};
    for (int i = 0; i < 3; ++i) {
      synthesis.push_back({{"question_id", q.question_id},
                           {"purpose", "solve"},
                           {"index", i + 1},
                           {"text", solves[i]}});
    }
  }

  fx.mock_script = {{"version", 1},
                    {"default_text", ""},
                    {"responses", std::move(responses)},
                    {"synthesis", std::move(synthesis)}};
  return fx;
}

void write_strategyqa_jsonl(const std::string& path,
                            const std::vector<harness::QuestionRecord>& questions) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw BackendError("cannot write dataset: " + path, false);
  for (const auto& q : questions) {
    nlohmann::json j;
    j["qid"] = q.question_id;
    j["question"] = q.text;
    j["answer"] = q.gold == "True";
    out << j.dump() << "\n";
  }
}

void write_json(const std::string& path, const nlohmann::json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw BackendError("cannot write json: " + path, false);
  out << j.dump(2) << "\n";
}

}  // namespace smagdi::fixtures
