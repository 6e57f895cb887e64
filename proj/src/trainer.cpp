#include <algorithm>
#include <cmath>
#include <filesystem>
#include <numeric>

#include "smagdi/distill.hpp"
#include "smagdi/error.hpp"
#include "smagdi/rng.hpp"

namespace smagdi::distill {
namespace {

struct LMSpec {
  bool decomposer{false};
  std::string prompt;
  std::string completion;
};

struct ContrastPair {
  std::string pos_chain;
  std::string neg_chain;
};

struct AlignPair {
  std::string dec_text;
  std::string sol_text;
};

struct Pools {
  std::vector<LMSpec> lm;
  std::vector<ContrastPair> pairs;
  std::vector<AlignPair> aligns;
};

Pools build_pools(const std::vector<graph::InteractionGraph>& graphs,
                  agents::AgentBackend& backend) {
  Pools pools;
  for (const auto& g : graphs) {
    const auto examples = extract_examples(g, backend);
    std::vector<const TrainingExample*> positives, negatives, solvers;
    const TrainingExample* dec = nullptr;
    for (const auto& ex : examples) {
      switch (ex.kind) {
        case ExampleKind::kPositive:
          positives.push_back(&ex);
          pools.lm.push_back({false, ex.prompt, ex.completion});
          break;
        case ExampleKind::kNegative:
          negatives.push_back(&ex);
          break;
        case ExampleKind::kSolver:
          solvers.push_back(&ex);
          pools.lm.push_back({false, ex.prompt, ex.completion});
          break;
        case ExampleKind::kDecomposer:
          dec = &ex;
          pools.lm.push_back({true, ex.prompt, ex.completion});
          break;
      }
    }
    if (!negatives.empty()) {
      for (std::size_t i = 0; i < positives.size(); ++i) {
        pools.pairs.push_back(
            {positives[i]->completion, negatives[i % negatives.size()]->completion});
      }
    }
    if (dec != nullptr && !solvers.empty()) {
      std::string joined;
      for (std::size_t i = 0; i < solvers.size(); ++i) {
        if (i > 0) joined += "\n";
        joined += solvers[i]->completion;
      }
      pools.aligns.push_back({dec->completion, joined});
    }
  }
  return pools;
}

std::vector<int> shuffled_indices(std::size_t n, SplitMix64& rng) {
  std::vector<int> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  deterministic_shuffle(idx, rng);
  return idx;
}

// Snapshot of every registered tensor, for divergence rollback and
// restore-best without touching the filesystem.
std::vector<nn::Mat> snapshot(const nn::ParamSet& set) {
  std::vector<nn::Mat> out;
  out.reserve(set.entries().size());
  for (const auto& e : set.entries()) out.push_back(*e.value);
  return out;
}

void restore(nn::ParamSet& set, const std::vector<nn::Mat>& snap) {
  for (std::size_t i = 0; i < snap.size(); ++i) *set.entries()[i].value = snap[i];
}

struct StepLosses {
  nn::Var total{-1};
  double lm{0.0}, node{0.0}, contrast{0.0}, align{0.0}, total_value{0.0};
};

// Assembles the composite objective for one batch on the given tape.
StepLosses build_step(nn::Tape& tape, StudentUnit& student, const BoundStudent& bound,
                      const std::vector<nn::Var>& gcn_vars, gcn::GCNParams& gcn_params,
                      const graph::GraphBatch* batch, const Pools& pools,
                      const std::vector<int>& lm_idx, std::size_t lm_begin, std::size_t lm_count,
                      const std::vector<int>& pair_idx, std::size_t pair_begin,
                      std::size_t pair_count, const std::vector<int>& align_idx,
                      std::size_t align_begin, std::size_t align_count,
                      const losses::LossCoefficients& coeff) {
  StepLosses out;
  std::vector<std::pair<double, nn::Var>> terms;

  if (coeff.alpha != 0.0 && lm_count > 0 && !pools.lm.empty()) {
    std::vector<std::pair<double, nn::Var>> items;
    for (std::size_t i = 0; i < lm_count; ++i) {
      const auto& spec = pools.lm[lm_idx[(lm_begin + i) % lm_idx.size()]];
      CausalLM& lm = spec.decomposer ? *student.decomposer : *student.solver;
      const auto& lm_bound = spec.decomposer ? bound.dec : bound.sol;
      const LMItem item = make_lm_item(lm, spec.prompt, spec.completion);
      const auto o = lm.forward(tape, lm_bound, item.tokens);
      items.emplace_back(1.0 / lm_count, tape.cross_entropy_mean(o.logits, item.targets,
                                                                 item.mask));
    }
    const nn::Var lm_var = tape.weighted_sum(items);
    out.lm = tape.value(lm_var)(0, 0);
    terms.emplace_back(coeff.alpha, lm_var);
  }

  if (coeff.beta != 0.0 && batch != nullptr) {
    const nn::Var node_var = gcn::gcn_node_loss(tape, *batch, gcn_vars, gcn_params.config);
    out.node = tape.value(node_var)(0, 0);
    terms.emplace_back(coeff.beta, node_var);
  }

  if (coeff.gamma != 0.0 && pair_count > 0 && !pools.pairs.empty()) {
    std::vector<nn::Var> pos, neg;
    for (std::size_t i = 0; i < pair_count; ++i) {
      const auto& pair = pools.pairs[pair_idx[(pair_begin + i) % pair_idx.size()]];
      pos.push_back(score_chain_var(tape, student, bound, pair.pos_chain));
      neg.push_back(score_chain_var(tape, student, bound, pair.neg_chain));
    }
    const nn::Var contrast_var =
        tape.hinge_pairs_mean(tape.concat_rows(pos), tape.concat_rows(neg));
    out.contrast = tape.value(contrast_var)(0, 0);
    terms.emplace_back(coeff.gamma, contrast_var);
  }

  if (coeff.delta != 0.0 && align_count > 0 && !pools.aligns.empty()) {
    std::vector<std::pair<double, nn::Var>> items;
    for (std::size_t i = 0; i < align_count; ++i) {
      const auto& pair = pools.aligns[align_idx[(align_begin + i) % align_idx.size()]];
      auto pooled = [&](CausalLM& lm, const CausalLM::Bound& b, const std::string& text) {
        std::vector<int> tokens = lm.tokenize(text);
        const int block = lm.max_context();
        if (static_cast<int>(tokens.size()) > block) {
          tokens.erase(tokens.begin(), tokens.end() - block);
        }
        return tape.mean_rows(lm.forward(tape, b, tokens).hidden);
      };
      const nn::Var z_dec = tape.add(
          tape.matmul(pooled(*student.decomposer, bound.dec, pair.dec_text), bound.proj_dec_w),
          bound.proj_dec_b);
      const nn::Var z_sol = tape.add(
          tape.matmul(pooled(*student.solver, bound.sol, pair.sol_text), bound.proj_sol_w),
          bound.proj_sol_b);
      items.emplace_back(1.0 / align_count, tape.mse_mean_rows(z_dec, z_sol));
    }
    const nn::Var align_var = tape.weighted_sum(items);
    out.align = tape.value(align_var)(0, 0);
    terms.emplace_back(coeff.delta, align_var);
  }

  if (terms.empty()) {
    out.total = tape.input(nn::Mat(1, 1), false);
    out.total_value = 0.0;
    return out;
  }
  out.total = tape.weighted_sum(terms);
  // total_loss re-derives the value and traps NaN components.
  out.total_value =
      losses::total_loss(out.lm, out.node, out.contrast, out.align, coeff).total;
  return out;
}

}  // namespace

nlohmann::json history_to_json(const TrainResult& result) {
  nlohmann::json j;
  j["version"] = 1;
  j["initial_total"] = result.initial_total;
  j["final_total"] = result.final_total;
  j["best_epoch"] = result.best_epoch;
  j["diverged"] = result.diverged;
  auto epochs = nlohmann::json::array();
  for (const auto& e : result.history) {
    epochs.push_back({{"epoch", e.epoch},
                      {"lm", e.lm},
                      {"node", e.node},
                      {"contrast", e.contrast},
                      {"align", e.align},
                      {"total", e.total},
                      {"val_total", e.val_total}});
  }
  j["epochs"] = std::move(epochs);
  return j;
}

TrainResult train(const std::vector<graph::InteractionGraph>& graphs, StudentUnit& student,
                  gcn::GCNParams& gcn_params, const TrainConfig& config,
                  agents::AgentBackend& backend) {
  if (graphs.empty()) throw ValidationError("train: no graphs");
  if (config.learning_rate <= 0.0) throw ValidationError("train: learning_rate must be > 0");
  if (config.epochs < 1) throw ValidationError("train: epochs must be >= 1");
  if (!student.has_heads) throw ValidationError("train: student must be trainable");

  // Seed-derived validation split over graphs.
  SplitMix64 split_rng(config.seed ^ 0x7a11da7a5e7ULL);
  auto graph_idx = shuffled_indices(graphs.size(), split_rng);
  std::size_t val_n = 0;
  if (graphs.size() >= 2 && config.validation_fraction > 0.0) {
    val_n = static_cast<std::size_t>(std::ceil(graphs.size() * config.validation_fraction));
    val_n = std::min(val_n, graphs.size() - 1);
  }
  std::vector<graph::InteractionGraph> train_graphs, val_graphs;
  for (std::size_t i = 0; i < graph_idx.size(); ++i) {
    (i < graph_idx.size() - val_n ? train_graphs : val_graphs).push_back(graphs[graph_idx[i]]);
  }

  const Pools train_pools = build_pools(train_graphs, backend);
  const Pools val_pools = val_graphs.empty() ? Pools{} : build_pools(val_graphs, backend);
  if (train_pools.lm.empty() && train_pools.pairs.empty()) {
    throw ValidationError("train: no training examples extractable from the graphs");
  }

  const bool use_gcn = config.coefficients.beta != 0.0;
  graph::GraphBatch train_batch, val_batch;
  if (use_gcn) {
    train_batch = graph::tensorize(train_graphs);
    if (train_batch.feature_dim != gcn_params.config.input_dim) {
      throw ValidationError("train: graph feature dim " + std::to_string(train_batch.feature_dim) +
                            " does not match GCN input dim " +
                            std::to_string(gcn_params.config.input_dim));
    }
    if (!val_graphs.empty()) val_batch = graph::tensorize(val_graphs);
  }

  nn::ParamSet params;
  student.register_params(params);
  gcn_params.register_params(params, "gcn");
  nn::AdamConfig adam_cfg;
  adam_cfg.lr = config.learning_rate;
  nn::Adam adam(params, adam_cfg);

  TrainResult result;
  int start_epoch = 0;
  if (!config.resume_from.empty()) {
    const auto info = nn::load_checkpoint(config.resume_from, params);
    adam.set_steps(info.adam_steps);
    start_epoch = info.extra.value("epoch", 0);
    result.best_val = info.extra.value("best_val", result.best_val);
    result.best_epoch = info.extra.value("best_epoch", -1);
    if (info.extra.contains("history")) {
      for (const auto& e : info.extra.at("history")) {
        result.history.push_back({e.at("epoch").get<int>(), e.at("lm").get<double>(),
                                  e.at("node").get<double>(), e.at("contrast").get<double>(),
                                  e.at("align").get<double>(), e.at("total").get<double>(),
                                  e.at("val_total").get<double>()});
      }
    }
  }

  std::vector<nn::Mat> last_good = snapshot(params);
  std::vector<nn::Mat> best_params = snapshot(params);
  bool have_best = result.best_epoch > 0;

  const auto& coeff = config.coefficients;
  const std::size_t lm_per_step = static_cast<std::size_t>(std::max(1, config.batch_size));
  const std::size_t steps_per_epoch = std::max<std::size_t>(
      1, (std::max<std::size_t>(train_pools.lm.size(), 1) + lm_per_step - 1) / lm_per_step);

  auto epoch_checkpoint_extra = [&](int epoch) {
    nlohmann::json extra;
    extra["epoch"] = epoch;
    extra["best_val"] = result.best_val;
    extra["best_epoch"] = result.best_epoch;
    extra["history"] = history_to_json(result)["epochs"];
    return extra;
  };

  auto evaluate_pools = [&](const Pools& pools, const graph::GraphBatch* batch) {
    nn::Tape tape;
    const auto bound = bind_student(tape, student, false);
    std::vector<nn::Var> gvars;
    if (use_gcn && batch != nullptr && batch->batch_size > 0) {
      gvars = gcn::gcn_param_vars(tape, gcn_params, false);
    }
    std::vector<int> lm_idx(pools.lm.size());
    std::iota(lm_idx.begin(), lm_idx.end(), 0);
    std::vector<int> pair_idx(pools.pairs.size());
    std::iota(pair_idx.begin(), pair_idx.end(), 0);
    std::vector<int> align_idx(pools.aligns.size());
    std::iota(align_idx.begin(), align_idx.end(), 0);
    const auto losses_out = build_step(
        tape, student, bound, gvars, gcn_params,
        (use_gcn && batch != nullptr && batch->batch_size > 0) ? batch : nullptr, pools, lm_idx,
        0, lm_idx.size(), pair_idx, 0, pair_idx.size(), align_idx, 0, align_idx.size(), coeff);
    return losses_out.total_value;
  };

  int epochs_since_best = 0;
  for (int epoch = start_epoch + 1; epoch <= config.epochs; ++epoch) {
    SplitMix64 epoch_rng = SplitMix64(config.seed).fork(static_cast<std::uint64_t>(epoch));
    const auto lm_idx = shuffled_indices(std::max<std::size_t>(train_pools.lm.size(), 1),
                                         epoch_rng);
    const auto pair_idx = shuffled_indices(std::max<std::size_t>(train_pools.pairs.size(), 1),
                                           epoch_rng);
    const auto align_idx = shuffled_indices(std::max<std::size_t>(train_pools.aligns.size(), 1),
                                            epoch_rng);

    EpochStats stats;
    stats.epoch = epoch;
    bool aborted = false;
    for (std::size_t step = 0; step < steps_per_epoch; ++step) {
      nn::Tape tape;
      auto bound = bind_student(tape, student, true);
      std::vector<nn::Var> gvars;
      if (use_gcn) gvars = gcn::gcn_param_vars(tape, gcn_params, true);

      StepLosses step_losses;
      try {
        step_losses = build_step(
            tape, student, bound, gvars, gcn_params, use_gcn ? &train_batch : nullptr,
            train_pools, lm_idx, step * lm_per_step,
            std::min(lm_per_step, std::max<std::size_t>(train_pools.lm.size(), 1)), pair_idx,
            step * config.contrast_pairs_per_step,
            train_pools.pairs.empty()
                ? 0
                : std::min<std::size_t>(config.contrast_pairs_per_step,
                                        train_pools.pairs.size()),
            align_idx, step * config.align_pairs_per_step,
            train_pools.aligns.empty()
                ? 0
                : std::min<std::size_t>(config.align_pairs_per_step,
                                        train_pools.aligns.size()),
            coeff);
      } catch (const NumericError&) {
        restore(params, last_good);
        result.diverged = true;
        aborted = true;
        break;
      }
      if (!std::isfinite(step_losses.total_value)) {
        restore(params, last_good);
        result.diverged = true;
        aborted = true;
        break;
      }

      tape.backward(step_losses.total);
      std::vector<const nn::Mat*> grads;
      grads.reserve(params.entries().size());
      for (const auto& v : bound.dec.vars) grads.push_back(&tape.grad(v));
      for (const auto& v : bound.sol.vars) grads.push_back(&tape.grad(v));
      for (const auto& v : {bound.proj_dec_w, bound.proj_dec_b, bound.proj_sol_w,
                            bound.proj_sol_b, bound.scorer_w, bound.scorer_b}) {
        grads.push_back(&tape.grad(v));
      }
      for (const auto& v : gvars) grads.push_back(&tape.grad(v));
      if (!use_gcn) {
        // GCN tensors still sit in the ParamSet; pad with null gradients.
        while (grads.size() < params.entries().size()) grads.push_back(nullptr);
      }
      adam.step(grads);

      stats.lm += step_losses.lm;
      stats.node += step_losses.node;
      stats.contrast += step_losses.contrast;
      stats.align += step_losses.align;
      stats.total += step_losses.total_value;
    }
    if (aborted) break;

    stats.lm /= steps_per_epoch;
    stats.node /= steps_per_epoch;
    stats.contrast /= steps_per_epoch;
    stats.align /= steps_per_epoch;
    stats.total /= steps_per_epoch;
    stats.val_total = val_graphs.empty()
                          ? stats.total
                          : evaluate_pools(val_pools, val_graphs.empty() ? nullptr : &val_batch);
    result.history.push_back(stats);

    last_good = snapshot(params);
    if (stats.val_total < result.best_val) {
      result.best_val = stats.val_total;
      result.best_epoch = epoch;
      best_params = snapshot(params);
      have_best = true;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }

    if (!config.checkpoint_dir.empty()) {
      std::filesystem::create_directories(config.checkpoint_dir);
      const auto extra = epoch_checkpoint_extra(epoch);
      result.last_checkpoint = config.checkpoint_dir + "/ckpt_last.bin";
      nn::save_checkpoint(result.last_checkpoint, params, extra, adam.steps(), true);
      if (result.best_epoch == epoch) {
        result.best_checkpoint = config.checkpoint_dir + "/ckpt_best.bin";
        nn::save_checkpoint(result.best_checkpoint, params, extra, adam.steps(), true);
      }
    }

    if (config.early_stopping_patience > 0 &&
        epochs_since_best >= config.early_stopping_patience) {
      break;
    }
  }

  if (!result.history.empty()) {
    result.initial_total = result.history.front().total;
    result.final_total = result.history.back().total;
  }

  // Keep the best-validation parameters in the live model. Prefer the best
  // checkpoint file (exact across resumes); fall back to the in-memory copy.
  if (!result.diverged) {
    std::string best_path = result.best_checkpoint;
    if (best_path.empty() && !config.checkpoint_dir.empty()) {
      const std::string candidate = config.checkpoint_dir + "/ckpt_best.bin";
      if (std::filesystem::exists(candidate)) best_path = candidate;
    }
    if (!best_path.empty()) {
      nn::load_checkpoint(best_path, params);
      result.best_checkpoint = best_path;
    } else if (have_best) {
      restore(params, best_params);
    }
  }
  return result;
}

}  // namespace smagdi::distill
