#include "smagdi/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "smagdi/error.hpp"
#include "smagdi/rng.hpp"

namespace smagdi::harness {
namespace {

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return s;
}

// true/false/yes/no, case-insensitive; also accepts JSON booleans upstream.
bool parse_boolean(const std::string& raw, int row) {
  const std::string v = lower(raw);
  if (v == "true" || v == "yes") return true;
  if (v == "false" || v == "no") return false;
  throw ValidationError("row " + std::to_string(row) + ": unparseable boolean answer '" + raw +
                        "'");
}

int letter_to_index(const std::string& raw, int row) {
  if (raw.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(raw[0])));
    if (c >= 'A' && c <= 'D') return c - 'A';
    if (c >= '0' && c <= '3') return c - '0';
  }
  throw ValidationError("row " + std::to_string(row) + ": unparseable MMLU answer '" + raw +
                        "'");
}

// Splits one CSV record, honoring quoted fields with embedded commas.
std::vector<std::string> split_csv_row(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current.push_back(c);
    }
  }
  fields.push_back(current);
  return fields;
}

std::vector<nlohmann::json> load_json_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open dataset: " + path, false);
  std::vector<nlohmann::json> rows;

  // Whole-file JSON array or JSONL, decided by the first non-space byte.
  char first = 0;
  in >> std::ws;
  in.get(first);
  in.unget();
  if (first == '[') {
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(std::string("dataset parse failure: ") + e.what(), "$");
    }
    for (auto& row : doc) rows.push_back(std::move(row));
  } else {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      try {
        rows.push_back(nlohmann::json::parse(line));
      } catch (const nlohmann::json::parse_error& e) {
        throw ParseError("row " + std::to_string(line_no) + ": " + e.what(), "$");
      }
    }
  }
  return rows;
}

}  // namespace

const std::vector<std::string>& boolean_answer_space() {
  static const std::vector<std::string> space{"True", "False"};
  return space;
}

const std::vector<std::string>& mmlu_answer_space() {
  static const std::vector<std::string> space{"0", "1", "2", "3"};
  return space;
}

std::vector<QuestionRecord> load_strategyqa(const std::string& path) {
  const auto rows = load_json_rows(path);
  std::vector<QuestionRecord> out;
  int row_no = 0;
  for (const auto& row : rows) {
    ++row_no;
    if (!row.contains("question") || !row.contains("answer")) {
      throw ValidationError("row " + std::to_string(row_no) +
                            ": StrategyQA record needs 'question' and 'answer'");
    }
    QuestionRecord q;
    q.question_id = row.contains("qid") ? row.at("qid").get<std::string>()
                                        : "strategyqa-" + std::to_string(row_no);
    q.text = row.at("question").get<std::string>();
    q.answer_space = boolean_answer_space();
    const auto& ans = row.at("answer");
    bool value = false;
    if (ans.is_boolean()) {
      value = ans.get<bool>();
    } else if (ans.is_string()) {
      value = parse_boolean(ans.get<std::string>(), row_no);
    } else {
      throw ValidationError("row " + std::to_string(row_no) + ": unparseable boolean answer");
    }
    q.gold = value ? "True" : "False";
    out.push_back(std::move(q));
  }
  return out;
}

std::vector<QuestionRecord> load_mmlu(const std::string& path, const std::string& subject_tag) {
  const std::string subject =
      subject_tag.empty() ? std::filesystem::path(path).stem().string() : subject_tag;

  std::vector<QuestionRecord> out;
  const std::string ext = std::filesystem::path(path).extension().string();
  if (ext == ".json" || ext == ".jsonl") {
    const auto rows = load_json_rows(path);
    int row_no = 0;
    for (const auto& row : rows) {
      ++row_no;
      if (!row.contains("question") || !row.contains("choices") || !row.contains("answer")) {
        throw ValidationError("row " + std::to_string(row_no) +
                              ": MMLU record needs 'question', 'choices', 'answer'");
      }
      const auto choices = row.at("choices").get<std::vector<std::string>>();
      if (choices.size() != 4) {
        throw ValidationError("row " + std::to_string(row_no) + ": MMLU needs 4 choices");
      }
      QuestionRecord q;
      q.question_id = "mmlu-" + subject + "-" + std::to_string(row_no);
      std::string text = row.at("question").get<std::string>();
      for (int c = 0; c < 4; ++c) {
        text += "\n" + std::to_string(c) + ") " + choices[c];
      }
      q.text = std::move(text);
      q.answer_space = mmlu_answer_space();
      const auto& ans = row.at("answer");
      const int idx = ans.is_number_integer() ? ans.get<int>()
                                              : letter_to_index(ans.get<std::string>(), row_no);
      if (idx < 0 || idx > 3) {
        throw ValidationError("row " + std::to_string(row_no) + ": MMLU answer out of range");
      }
      q.gold = std::to_string(idx);
      q.subject = subject;
      out.push_back(std::move(q));
    }
    return out;
  }

  // Published CSV shape: question, A, B, C, D, answer letter; no header.
  std::ifstream in(path);
  if (!in) throw BackendError("cannot open dataset: " + path, false);
  std::string line;
  int row_no = 0;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.empty()) continue;
    const auto fields = split_csv_row(line);
    if (fields.size() < 6) {
      throw ValidationError("row " + std::to_string(row_no) + ": MMLU CSV needs 6 columns, got " +
                            std::to_string(fields.size()));
    }
    QuestionRecord q;
    q.question_id = "mmlu-" + subject + "-" + std::to_string(row_no);
    std::string text = fields[0];
    for (int c = 0; c < 4; ++c) {
      text += "\n" + std::to_string(c) + ") " + fields[1 + c];
    }
    q.text = std::move(text);
    q.answer_space = mmlu_answer_space();
    q.gold = std::to_string(letter_to_index(fields[5], row_no));
    q.subject = subject;
    out.push_back(std::move(q));
  }
  return out;
}

std::pair<std::vector<QuestionRecord>, std::vector<QuestionRecord>> split(
    std::vector<QuestionRecord> records, const SplitSpec& spec) {
  if (spec.train_fraction <= 0.0 || spec.train_fraction >= 1.0) {
    throw ValidationError("split: train_fraction must lie in (0, 1)");
  }
  // Frozen shuffle (SplitMix64 Fisher-Yates): membership is stable across
  // platforms and releases for a given seed.
  SplitMix64 rng(spec.seed);
  deterministic_shuffle(records, rng);

  const std::size_t train_n =
      static_cast<std::size_t>(records.size() * spec.train_fraction + 0.5);
  std::vector<QuestionRecord> train(records.begin(), records.begin() + train_n);
  std::vector<QuestionRecord> test(records.begin() + train_n, records.end());

  if (spec.subset_size.has_value()) {
    if (*spec.subset_size > train.size()) {
      throw ValidationError("split: subset_size " + std::to_string(*spec.subset_size) +
                            " exceeds train partition size " + std::to_string(train.size()));
    }
    train.resize(*spec.subset_size);
  }
  return {std::move(train), std::move(test)};
}

}  // namespace smagdi::harness
