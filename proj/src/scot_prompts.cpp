#include "smagdi/scot_prompts.hpp"

#include <cctype>
#include <sstream>

namespace smagdi::scot {
namespace {

std::string options_line(const std::vector<std::string>& answer_space) {
  std::string out = "Options: ";
  for (std::size_t i = 0; i < answer_space.size(); ++i) {
    if (i > 0) out += " | ";
    out += answer_space[i];
  }
  return out;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Returns the content start when `line` opens a numbered item, npos otherwise.
std::size_t numbered_item_start(const std::string& line) {
  std::size_t i = 0;
  while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
  // Optional "Decomposition" prefix.
  constexpr const char* kWord = "decomposition";
  std::size_t w = 0;
  std::size_t j = i;
  while (j < line.size() && w < 13 &&
         std::tolower(static_cast<unsigned char>(line[j])) == kWord[w]) {
    ++j;
    ++w;
  }
  if (w == 13) {
    while (j < line.size() && line[j] == ' ') ++j;
    i = j;
  }
  std::size_t digits = 0;
  while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) {
    ++i;
    ++digits;
  }
  if (digits == 0) return std::string::npos;
  if (i < line.size() && (line[i] == '.' || line[i] == ')' || line[i] == ':')) {
    ++i;
    while (i < line.size() && line[i] == ' ') ++i;
    return i;
  }
  return std::string::npos;
}

}  // namespace

std::string decomposer_prompt(const std::string& question) {
  std::ostringstream out;
  out << "Break this down into sub-questions that will help determine the answer.\n";
  out << "Question: " << question << "\n";
  out << "Sub-questions:\n";
  return out.str();
}

std::string solver_prompt(const std::string& main_question,
                          const std::vector<std::pair<std::string, std::string>>& prior,
                          const std::string& sub_question) {
  std::ostringstream out;
  out << "Provide a clear answer that aids in determining the answer to the main question.\n";
  out << "Main question: " << main_question << "\n";
  if (!prior.empty()) {
    out << "Answered so far:\n";
    for (std::size_t i = 0; i < prior.size(); ++i) {
      out << (i + 1) << ". " << prior[i].first << " -> " << prior[i].second << "\n";
    }
  }
  out << "Sub-question: " << sub_question << "\n";
  out << "Answer:";
  return out.str();
}

std::string compose_prompt(const std::string& main_question,
                           const std::vector<std::pair<std::string, std::string>>& answered,
                           const std::vector<std::string>& answer_space) {
  std::ostringstream out;
  out << "Main question: " << main_question << "\n";
  out << "Sub-questions and answers:\n";
  for (std::size_t i = 0; i < answered.size(); ++i) {
    out << (i + 1) << ". " << answered[i].first << " -> " << answered[i].second << "\n";
  }
  out << options_line(answer_space) << "\n";
  out << "Based on these answers, state the final answer on the last line in the form "
         "\"Answer: <option>\".\n";
  out << "Answer:";
  return out.str();
}

std::string direct_prompt(const std::string& main_question,
                          const std::vector<std::string>& answer_space) {
  std::ostringstream out;
  out << "Question: " << main_question << "\n";
  out << options_line(answer_space) << "\n";
  out << "State the final answer on the last line in the form \"Answer: <option>\".\n";
  out << "Answer:";
  return out.str();
}

std::vector<std::string> parse_numbered_list(const std::string& text) {
  std::vector<std::string> items;
  std::istringstream in(text);
  std::string line;
  std::string current;
  bool in_item = false;
  auto flush = [&] {
    if (in_item) {
      const std::string t = trim(current);
      if (!t.empty()) items.push_back(t);
    }
    current.clear();
  };
  while (std::getline(in, line)) {
    const std::size_t start = numbered_item_start(line);
    if (start != std::string::npos) {
      flush();
      in_item = true;
      current = line.substr(start);
    } else if (in_item) {
      current += "\n" + line;
    }
  }
  flush();
  return items;
}

}  // namespace smagdi::scot
