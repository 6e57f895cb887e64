#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "smagdi/mat.hpp"

namespace smagdi::nn {

// Named, ordered registry of trainable tensors. The tensors themselves are
// owned by the model structs; the registry adds Adam moments and gives
// checkpoints a stable name -> shape mapping.
class ParamSet {
 public:
  struct Entry {
    std::string name;
    Mat* value;
    Mat m;  // Adam first moment
    Mat v;  // Adam second moment
  };

  void add(const std::string& name, Mat* value);
  std::vector<Entry>& entries() { return entries_; }
  const std::vector<Entry>& entries() const { return entries_; }
  Entry* find(const std::string& name);
  std::size_t total_parameters() const;

 private:
  std::vector<Entry> entries_;
};

struct AdamConfig {
  double lr{1e-3};
  double beta1{0.9};
  double beta2{0.999};
  double eps{1e-8};
};

// Adaptive-moment gradient descent with bias correction.
class Adam {
 public:
  explicit Adam(ParamSet& params, AdamConfig cfg = {});

  // grads[i] aligns with params.entries()[i]; nullptr means zero gradient.
  void step(const std::vector<const Mat*>& grads);

  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  AdamConfig& config() { return cfg_; }

 private:
  ParamSet* params_;
  AdamConfig cfg_;
  std::int64_t t_{0};
};

// Checkpoint file: "SMAGDIC1" magic, u64 manifest length, JSON manifest,
// then raw little-endian doubles. Values (and Adam moments when present)
// round-trip bit-exactly.
void save_checkpoint(const std::string& path, const ParamSet& params,
                     const nlohmann::json& extra, std::int64_t adam_steps,
                     bool include_moments = true);

struct CheckpointInfo {
  nlohmann::json extra;
  std::int64_t adam_steps{0};
  bool has_moments{false};
};

// Loads values (and moments when stored) through the registered pointers.
// Names and shapes must match the ParamSet exactly.
CheckpointInfo load_checkpoint(const std::string& path, ParamSet& params);

// Reads only the manifest "extra" blob (model configuration) without params.
nlohmann::json peek_checkpoint_extra(const std::string& path);

}  // namespace smagdi::nn
