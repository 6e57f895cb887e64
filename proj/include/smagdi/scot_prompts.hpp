#pragma once

#include <string>
#include <utility>
#include <vector>

namespace smagdi::scot {

// Prompt builders shared by training-example extraction and zero-shot
// inference: the student is trained on exactly the formats it will see.

std::string decomposer_prompt(const std::string& question);

// prior holds (sub-question, answer) pairs accumulated so far, in order.
std::string solver_prompt(const std::string& main_question,
                          const std::vector<std::pair<std::string, std::string>>& prior,
                          const std::string& sub_question);

std::string compose_prompt(const std::string& main_question,
                           const std::vector<std::pair<std::string, std::string>>& answered,
                           const std::vector<std::string>& answer_space);

// Direct answer for atomic questions (empty decomposition).
std::string direct_prompt(const std::string& main_question,
                          const std::vector<std::string>& answer_space);

// Parses "1. foo" / "1) foo" / "Decomposition 1: foo" items; an item runs
// until the next numbered line. Returns {} when no item is found.
std::vector<std::string> parse_numbered_list(const std::string& text);

}  // namespace smagdi::scot
