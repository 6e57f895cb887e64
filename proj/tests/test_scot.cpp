#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memory>

#include "smagdi/agents.hpp"
#include "smagdi/fixtures.hpp"
#include "smagdi/scot.hpp"

using namespace smagdi;
using namespace smagdi::scot;
using fixtures::ScriptedLM;

namespace {

harness::QuestionRecord bool_question(const std::string& text) {
  harness::QuestionRecord q;
  q.question_id = "sq1";
  q.text = text;
  q.answer_space = {"True", "False"};
  q.gold = "True";
  return q;
}

distill::StudentUnit scripted_student(std::shared_ptr<ScriptedLM> dec,
                                      std::shared_ptr<ScriptedLM> sol) {
  return distill::StudentUnit::wrap(std::move(dec), std::move(sol));
}

struct ObserverGuard {
  explicit ObserverGuard(PromptObserver obs) { prev_ = set_prompt_observer(std::move(obs)); }
  ~ObserverGuard() { set_prompt_observer(std::move(prev_)); }
  PromptObserver prev_;
};

}  // namespace

TEST_CASE("parse_numbered_list accepts both numbering styles") {
  const auto plain = parse_numbered_list("1. alpha?\n2. beta?\n3. gamma?");
  REQUIRE(plain.size() == 3);
  CHECK(plain[1] == "beta?");

  const auto decomp = parse_numbered_list(
      "Decomposition 1: What counts as success?\nDecomposition 2: Was the region involved?");
  REQUIRE(decomp.size() == 2);
  CHECK(decomp[0] == "What counts as success?");

  const auto multiline = parse_numbered_list("1. first line\ncontinued detail\n2. second");
  REQUIRE(multiline.size() == 2);
  CHECK(multiline[0] == "first line\ncontinued detail");

  CHECK(parse_numbered_list("no numbering at all").empty());
}

TEST_CASE("decompose: five scripted items come back in order") {
  auto dec = std::make_shared<ScriptedLM>();
  dec->add_rule("Break this down",
                "1. What counts as success?\n2. What was the involvement?\n3. Was there a direct "
                "contribution?\n4. Any indirect importance?\n5. So was it part of the success?");
  auto student = scripted_student(dec, std::make_shared<ScriptedLM>());
  const auto subs = decompose(student, "Was the harbor part of the campaign's success?");
  REQUIRE(subs.size() == 5);
  CHECK(subs[0] == "What counts as success?");
  CHECK(subs[4] == "So was it part of the success?");
}

TEST_CASE("decompose: unnumbered generation falls back to the question itself") {
  auto dec = std::make_shared<ScriptedLM>();
  dec->set_default_text("thinking out loud without any list");
  auto student = scripted_student(dec, std::make_shared<ScriptedLM>());
  const auto subs = decompose(student, "Original question?");
  REQUIRE(subs.size() == 1);
  CHECK(subs[0] == "Original question?");
}

TEST_CASE("decompose: empty generation marks the question atomic") {
  auto student = scripted_student(std::make_shared<ScriptedLM>(), std::make_shared<ScriptedLM>());
  CHECK(decompose(student, "Atomic question?").empty());
}

TEST_CASE("solve_sub accumulates context in order") {
  auto sol = std::make_shared<ScriptedLM>();
  sol->add_rule("2. second? -> beta answer", "third answer sees both priors");
  sol->add_rule("Answered so far", "second answer sees one prior");
  sol->set_default_text("first answer, no prior context");
  auto student = scripted_student(std::make_shared<ScriptedLM>(), sol);

  std::vector<std::pair<std::string, std::string>> prior;
  const auto a1 = solve_sub(student, "Main?", prior, "first?");
  CHECK(a1 == "first answer, no prior context");
  prior.emplace_back("first?", a1);
  const auto a2 = solve_sub(student, "Main?", prior, "second?");
  CHECK(a2 == "second answer sees one prior");
  prior.emplace_back("second?", "beta answer");
  const auto a3 = solve_sub(student, "Main?", prior, "third?");
  CHECK(a3 == "third answer sees both priors");
}

TEST_CASE("solve_sub retries once then yields the ABSTAIN placeholder") {
  auto sol = std::make_shared<ScriptedLM>();
  sol->set_default_text("recovered answer");
  auto student = scripted_student(std::make_shared<ScriptedLM>(), sol);

  sol->fail_next(1);
  CHECK(solve_sub(student, "Main?", {}, "sub?") == "recovered answer");

  sol->fail_next(2);
  CHECK(solve_sub(student, "Main?", {}, "sub?") == agents::kAbstain);

  // The placeholder flows through composition without crashing.
  auto dec = std::make_shared<ScriptedLM>();
  dec->add_rule("Break this down", "1. only sub?");
  auto sol2 = std::make_shared<ScriptedLM>();
  sol2->add_rule("Based on these answers", "Answer: True");
  sol2->set_default_text("fine");
  auto student2 = scripted_student(dec, sol2);
  sol2->fail_next(2);
  const auto trace = infer(student2, bool_question("Main?"), {});
  CHECK(trace.sub_answers[0] == agents::kAbstain);
  CHECK(trace.final_answer == "True");
}

TEST_CASE("infer reproduces the five-step decomposition shape ending in Answer: True") {
  auto dec = std::make_shared<ScriptedLM>();
  dec->add_rule("Break this down",
                "1. What do we mean by the campaign's success?\n"
                "2. What was the involvement in the region?\n"
                "3. Did the region contribute directly?\n"
                "4. Could it have had indirect importance?\n"
                "5. So, was it an important part of the success overall?");
  auto sol = std::make_shared<ScriptedLM>();
  sol->add_rule("Based on these answers", "Given the support above. Answer: True");
  sol->add_rule("Sub-question: What do we mean", "Key wins, cultural spread, and empire-building.");
  sol->add_rule("Sub-question: What was the involvement",
                "Campaigned in the region; the fleet used the river mouth.");
  sol->add_rule("Sub-question: Did the region contribute",
                "Minimally direct, but yes for logistics.");
  sol->add_rule("Sub-question: Could it have had indirect",
                "Yes, the natural harbor aided trade exploration.");
  sol->add_rule("Sub-question: So, was it", "Answer: True");
  auto student = scripted_student(dec, sol);

  const auto q = bool_question("Was the harbor a part of the campaign's success?");
  const auto trace = infer(student, q, {});
  CHECK(trace.decomposition.size() == 5);
  CHECK(trace.sub_answers.size() == 5);
  CHECK(trace.final_answer == "True");
  CHECK(trace.depth_used == 1);

  const auto j = trace_to_json(trace);
  const auto t2 = trace_from_json(j);
  CHECK(trace_to_json(t2) == j);
}

TEST_CASE("atomic questions go straight to the solver") {
  auto sol = std::make_shared<ScriptedLM>();
  sol->add_rule("State the final answer", "directly: Answer: False");
  auto student = scripted_student(std::make_shared<ScriptedLM>(), sol);
  const auto trace = infer(student, bool_question("Atomic?"), {});
  CHECK(trace.decomposition.empty());
  CHECK(trace.depth_used == 0);
  CHECK(trace.final_answer == "False");
}

TEST_CASE("max_depth gates recursion; answers agree, depth_used differs") {
  auto make_student = [] {
    auto dec = std::make_shared<ScriptedLM>();
    dec->add_rule("Question: Main?", "1. tricky sub?");
    dec->add_rule("Question: tricky sub?", "1. nested sub?");
    auto sol = std::make_shared<ScriptedLM>();
    sol->add_rule("Sub-question: tricky sub? ", "ignored");  // never matches (no trailing space)
    sol->add_rule("Sub-question: nested sub?", "nested resolution");
    sol->add_rule("Main question: tricky sub?", "resolved after nesting");
    sol->add_rule("Sub-question: tricky sub?", "this cannot be answered directly");
    sol->add_rule("Based on these answers", "Answer: True");
    return scripted_student(dec, sol);
  };

  InferenceConfig deep;
  deep.max_depth = 2;
  auto student_deep = make_student();
  const auto tr_deep = infer(student_deep, bool_question("Main?"), deep);
  CHECK(tr_deep.depth_used == 2);
  CHECK(tr_deep.final_answer == "True");
  CHECK(tr_deep.sub_answers[0] == "resolved after nesting");

  InferenceConfig shallow;
  shallow.max_depth = 1;
  auto student_shallow = make_student();
  const auto tr_shallow = infer(student_shallow, bool_question("Main?"), shallow);
  CHECK(tr_shallow.depth_used == 1);
  CHECK(tr_shallow.final_answer == "True");
  CHECK(tr_shallow.sub_answers[0] == "this cannot be answered directly");
}

TEST_CASE("zero-shot contract: no training text appears in inference prompts") {
  // Canary corpus: completions of synthesized training examples.
  const std::vector<std::string> canaries{
      "CANARY the glacier ledger balances. Answer: True",
      "CANARY precedent holds in every circuit. Answer: False",
  };

  std::vector<std::string> prompts;
  ObserverGuard guard([&](const std::string& p) { prompts.push_back(p); });

  auto dec = std::make_shared<ScriptedLM>();
  dec->add_rule("Break this down", "1. piece one?\n2. piece two?");
  auto sol = std::make_shared<ScriptedLM>();
  sol->set_default_text("a clean answer");
  sol->add_rule("Based on these answers", "Answer: True");
  auto student = scripted_student(dec, sol);

  const auto trace = infer(student, bool_question("Scan target?"), {});
  CHECK(trace.final_answer == "True");
  REQUIRE(!prompts.empty());
  for (const auto& p : prompts) {
    for (const auto& canary : canaries) {
      CHECK(p.find(canary) == std::string::npos);
    }
  }
}

TEST_CASE("infer is deterministic with a deterministic student at temperature 0") {
  auto dec = std::make_shared<ScriptedLM>();
  dec->add_rule("Break this down", "1. a?\n2. b?");
  auto sol = std::make_shared<ScriptedLM>();
  sol->set_default_text("same every time");
  sol->add_rule("Based on these answers", "Answer: False");
  auto student = scripted_student(dec, sol);

  const auto q = bool_question("Stable?");
  const auto t1 = infer(student, q, {});
  const auto t2 = infer(student, q, {});
  CHECK(trace_to_json(t1) == trace_to_json(t2));
  CHECK(t1.depth_used <= 2);
}
