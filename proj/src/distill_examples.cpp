#include <iostream>

#include "smagdi/distill.hpp"
#include "smagdi/error.hpp"
#include "smagdi/scot_prompts.hpp"

namespace smagdi::distill {

const char* example_kind_name(ExampleKind k) {
  switch (k) {
    case ExampleKind::kPositive: return "POSITIVE";
    case ExampleKind::kNegative: return "NEGATIVE";
    case ExampleKind::kDecomposer: return "DECOMPOSER";
    default: return "SOLVER";
  }
}

std::vector<std::vector<int>> enumerate_paths(const graph::InteractionGraph& graph) {
  const int n = static_cast<int>(graph.nodes.size());
  std::vector<std::vector<int>> out_edges(n);
  for (const auto& e : graph.edges) out_edges[e.src].push_back(e.dst);
  std::vector<int> leaves_mark(n, 1);
  for (int i = 0; i < n; ++i) {
    if (!out_edges[i].empty()) leaves_mark[i] = 0;
  }

  std::vector<std::vector<int>> paths;
  std::vector<int> stack{0};
  // Iterative DFS from the question node; edges were emitted in round order,
  // so paths come out deterministically.
  std::vector<std::size_t> cursor{0};
  while (!stack.empty()) {
    const int node = stack.back();
    if (out_edges[node].empty()) {
      paths.push_back(stack);
      stack.pop_back();
      cursor.pop_back();
      continue;
    }
    if (cursor.back() < out_edges[node].size()) {
      const int next = out_edges[node][cursor.back()];
      ++cursor.back();
      stack.push_back(next);
      cursor.push_back(0);
    } else {
      stack.pop_back();
      cursor.pop_back();
    }
  }
  return paths;
}

namespace {

std::string chain_text(const graph::InteractionGraph& g, const std::vector<int>& path) {
  std::string out;
  for (std::size_t i = 1; i < path.size(); ++i) {  // skip the question node
    if (i > 1) out += "\n";
    out += g.nodes[path[i]].text;
  }
  return out;
}

std::string chain_prompt(const graph::InteractionGraph& g) {
  return "Question: " + g.question_node().text + "\n";
}

std::string decompose_synthesis_prompt(const graph::InteractionGraph& g) {
  std::string prompt =
      "Decompose the following question into a sequence of simpler sub-questions that, when "
      "answered, would help solve the main question: " +
      g.question_node().text + ", based on the agent's responses\n";
  prompt += "Agent responses:\n";
  const int rounds = g.num_rounds();
  for (const auto& n : g.nodes) {
    if (n.kind == graph::NodeKind::kResponse && n.round == rounds) {
      prompt += "- " + n.agent_id + ": " + n.text + "\n";
    }
  }
  return prompt;
}

std::string solve_synthesis_prompt(const graph::InteractionGraph& g,
                                   const std::string& decomposition,
                                   const std::string& sub_question) {
  return "Answer the decompositions similar to the agent's responses\nMain question: " +
         g.question_node().text + "\nDecomposition:\n" + decomposition +
         "\nSub-question: " + sub_question + "\n";
}

}  // namespace

std::vector<TrainingExample> extract_examples(const graph::InteractionGraph& graph,
                                              agents::AgentBackend& backend) {
  for (const auto& n : graph.nodes) {
    if (n.kind == graph::NodeKind::kResponse && !n.correct.has_value()) {
      throw ValidationError("extract_examples: graph lacks correctness labels");
    }
  }

  std::vector<TrainingExample> examples;
  const auto paths = enumerate_paths(graph);
  int positives = 0;
  for (const auto& path : paths) {
    bool all_correct = true;
    for (std::size_t i = 1; i < path.size(); ++i) {
      if (!*graph.nodes[path[i]].correct) {
        all_correct = false;
        break;
      }
    }
    const bool terminal_incorrect = !*graph.nodes[path.back()].correct;
    if (!all_correct && !terminal_incorrect) continue;

    TrainingExample ex;
    ex.kind = all_correct ? ExampleKind::kPositive : ExampleKind::kNegative;
    ex.prompt = chain_prompt(graph);
    ex.completion = chain_text(graph, path);
    ex.source_node_ids = path;
    ex.question_id = graph.question_id;
    positives += all_correct ? 1 : 0;
    examples.push_back(std::move(ex));
  }
  if (positives == 0) {
    std::cerr << "[smagdi] warning: graph " << graph.question_id
              << " has no correct terminal chain; zero POSITIVE examples\n";
  }

  // Decomposer/solver synthesis through the backend.
  agents::GenerateRequest dreq;
  dreq.prompt = decompose_synthesis_prompt(graph);
  dreq.temperature = 0.7;
  dreq.question_id = graph.question_id;
  dreq.purpose = "decompose";
  const std::string decomposition = backend.generate(dreq);
  const auto sub_questions = scot::parse_numbered_list(decomposition);

  if (!sub_questions.empty()) {
    TrainingExample dec;
    dec.kind = ExampleKind::kDecomposer;
    dec.prompt = scot::decomposer_prompt(graph.question_node().text);
    dec.completion = decomposition;
    dec.source_node_ids = {0};
    dec.question_id = graph.question_id;
    examples.push_back(std::move(dec));

    std::vector<std::pair<std::string, std::string>> prior;
    for (std::size_t i = 0; i < sub_questions.size(); ++i) {
      agents::GenerateRequest sreq;
      sreq.prompt = solve_synthesis_prompt(graph, decomposition, sub_questions[i]);
      sreq.temperature = 0.7;
      sreq.question_id = graph.question_id;
      sreq.purpose = "solve";
      sreq.index = static_cast<int>(i + 1);
      const std::string answer = backend.generate(sreq);

      TrainingExample sol;
      sol.kind = ExampleKind::kSolver;
      sol.prompt = scot::solver_prompt(graph.question_node().text, prior, sub_questions[i]);
      sol.completion = answer;
      sol.source_node_ids = {0};
      sol.question_id = graph.question_id;
      examples.push_back(std::move(sol));
      prior.emplace_back(sub_questions[i], answer);
    }
  }
  return examples;
}

}  // namespace smagdi::distill
