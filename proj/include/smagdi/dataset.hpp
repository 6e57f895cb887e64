#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace smagdi::harness {

// One benchmark question in normalized form. StrategyQA uses the boolean
// answer space {True, False}; MMLU choices are mapped to index labels 0..3.
struct QuestionRecord {
  std::string question_id;
  std::string text;
  std::vector<std::string> answer_space;
  std::string gold;
  std::optional<std::string> subject;
};

struct SplitSpec {
  double train_fraction{0.8};
  std::uint64_t seed{42};
  std::optional<std::size_t> subset_size;  // truncates train after the shuffle
};

const std::vector<std::string>& boolean_answer_space();   // {True, False}
const std::vector<std::string>& mmlu_answer_space();      // {0, 1, 2, 3}

// Loaders for the datasets' published shapes. Malformed rows raise
// ValidationError naming the row number.
std::vector<QuestionRecord> load_strategyqa(const std::string& path);
std::vector<QuestionRecord> load_mmlu(const std::string& path,
                                      const std::string& subject_tag = "");

// Deterministic seeded shuffle, then partition; spec.subset_size truncates the
// train side (the shuffled order makes this a seeded random subset).
std::pair<std::vector<QuestionRecord>, std::vector<QuestionRecord>> split(
    std::vector<QuestionRecord> records, const SplitSpec& spec);

}  // namespace smagdi::harness
