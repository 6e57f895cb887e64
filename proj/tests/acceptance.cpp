// Acceptance suite: one line per criterion, nonzero exit when any fails.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <vector>

#include "smagdi/agents.hpp"
#include "smagdi/dataset.hpp"
#include "smagdi/debate.hpp"
#include "smagdi/distill.hpp"
#include "smagdi/evaluate.hpp"
#include "smagdi/fixtures.hpp"
#include "smagdi/gcn.hpp"
#include "smagdi/graph.hpp"
#include "smagdi/kernels.hpp"
#include "smagdi/losses.hpp"
#include "smagdi/rng.hpp"
#include "smagdi/scot.hpp"
#include "support/gradcheck.hpp"

#if defined(SMAGDI_HAVE_EIGEN)
#include <Eigen/Dense>
#endif

namespace {

using namespace smagdi;
using Clock = std::chrono::steady_clock;

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

#define REQUIRE_TRUE(cond, msg)                                                       \
  do {                                                                                \
    if (!(cond)) {                                                                    \
      std::ostringstream os_;                                                         \
      os_ << msg;                                                                     \
      throw Failure(os_.str());                                                       \
    }                                                                                 \
  } while (0)

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string temp_dir(const std::string& stem) {
  const std::string d =
      std::string(std::getenv("TMPDIR") ? std::getenv("TMPDIR") : "/tmp") + "/" + stem;
  std::filesystem::remove_all(d);
  std::filesystem::create_directories(d);
  return d;
}

debate::AgentWeights weights_from(const std::vector<double>& accs) {
  const auto& roster = agents::default_roster();
  std::map<std::string, double> m;
  for (std::size_t i = 0; i < roster.size(); ++i) m[roster[i].name] = accs[i];
  return debate::optimize_weights(m, 0.1);
}

std::vector<agents::AgentResponse> make_round(const std::vector<std::string>& answers) {
  const auto& roster = agents::default_roster();
  std::vector<agents::AgentResponse> out;
  for (std::size_t i = 0; i < roster.size(); ++i) {
    agents::AgentResponse r;
    r.agent_id = roster[i].name;
    r.round = 1;
    r.extracted_answer = answers[i];
    out.push_back(std::move(r));
  }
  return out;
}

harness::QuestionRecord bool_question(const std::string& id) {
  harness::QuestionRecord q;
  q.question_id = id;
  q.text = "Does the synthetic claim hold?";
  q.answer_space = harness::boolean_answer_space();
  q.gold = "True";
  return q;
}

debate::DebateTranscript scripted_transcript(
    const std::vector<std::vector<std::string>>& answers_per_round) {
  const auto& roster = agents::default_roster();
  debate::DebateTranscript t;
  t.question = bool_question("acc");
  for (std::size_t r = 0; r < answers_per_round.size(); ++r) {
    std::vector<agents::AgentResponse> round;
    for (std::size_t i = 0; i < roster.size(); ++i) {
      agents::AgentResponse resp;
      resp.agent_id = roster[i].name;
      resp.round = static_cast<int>(r + 1);
      resp.extracted_answer = answers_per_round[r][i];
      resp.raw_text = roster[i].name + " says Answer: " + answers_per_round[r][i];
      round.push_back(std::move(resp));
    }
    t.rounds.push_back(std::move(round));
  }
  t.final_answer = "True";
  return t;
}

// ---------------------------------------------------------------- criterion 1
void criterion_weighting() {
  const auto t0 = Clock::now();
  SplitMix64 rng(1001);
  const auto& roster = agents::default_roster();
  for (int trial = 0; trial < 1000; ++trial) {
    std::map<std::string, double> acc;
    for (const auto& p : roster) acc[p.name] = rng.next_double();
    const auto w = debate::optimize_weights(acc, 0.1);
    double total = 0.0;
    for (const auto& [_, v] : w.normalized) total += v;
    REQUIRE_TRUE(std::abs(total - 1.0) <= 1e-9, "normalized sum off by " << total - 1.0);
    for (const auto& a : roster) {
      REQUIRE_TRUE(w.raw.at(a.name) >= 0.1, "raw weight below the 0.1 floor");
      for (const auto& b : roster) {
        const double ca = std::max(0.1, acc[a.name]);
        const double cb = std::max(0.1, acc[b.name]);
        if (ca > cb) {
          REQUIRE_TRUE(w.normalized.at(a.name) > w.normalized.at(b.name),
                       "normalized ordering broke accuracy ordering");
        }
      }
    }
  }
  const auto w = weights_from({0.5, 0.25, 0.25, 0.0, 0.0});
  const double expect[] = {0.4167, 0.2083, 0.2083, 0.0833, 0.0833};
  for (std::size_t i = 0; i < roster.size(); ++i) {
    REQUIRE_TRUE(std::abs(w.normalized.at(roster[i].name) - expect[i]) <= 1e-3,
                 "worked example mismatch at agent " << i);
  }
  const double elapsed = ms_since(t0);
  REQUIRE_TRUE(elapsed < 1000.0, "runtime " << elapsed << " ms exceeds 1 s");
}

// ---------------------------------------------------------------- criterion 2
void criterion_debate_protocol() {
  const auto t0 = Clock::now();
  const auto& roster = agents::default_roster();
  const auto q = bool_question("acc2");

  auto script = [&](const std::vector<std::string>& answers) {
    agents::MockBackend mock;
    for (int r = 1; r <= 3; ++r) {
      for (std::size_t i = 0; i < roster.size(); ++i) {
        mock.add_response(q.question_id, roster[i].name, r, "Answer: " + answers[i]);
      }
    }
    return mock;
  };

  // (a) unanimity terminates in round 1 with consensus.
  auto unanimous = script({"True", "True", "True", "True", "True"});
  const auto ta = debate::run_debate(q, roster, unanimous, weights_from({.8, .8, .8, .8, .8}), {});
  REQUIRE_TRUE(ta.rounds.size() == 1, "unanimity ran " << ta.rounds.size() << " rounds");
  REQUIRE_TRUE(ta.decided_by == debate::DecisionMethod::kConsensus, "unanimity did not consense");

  // (b) perpetual disagreement: exactly 3 rounds, vote matches a brute-force
  // oracle over every True/False vote pattern.
  auto split = script({"True", "False", "True", "False", "False"});
  const auto w = weights_from({0.9, 0.3, 0.45, 0.2, 0.05});
  const auto tb = debate::run_debate(q, roster, split, w, {});
  REQUIRE_TRUE(tb.rounds.size() == 3, "disagreement ran " << tb.rounds.size() << " rounds");
  REQUIRE_TRUE(tb.decided_by == debate::DecisionMethod::kWeightedVote, "expected a vote");

  for (int pattern = 0; pattern < 32; ++pattern) {
    std::vector<std::string> answers;
    for (int i = 0; i < 5; ++i) answers.push_back((pattern >> i) & 1 ? "True" : "False");
    double t_score = 0.0, f_score = 0.0;
    for (std::size_t i = 0; i < roster.size(); ++i) {
      (answers[i] == "True" ? t_score : f_score) += w.normalized.at(roster[i].name);
    }
    const std::string oracle = t_score >= f_score ? "True" : "False";
    REQUIRE_TRUE(debate::weighted_vote(make_round(answers), w, q.answer_space) == oracle,
                 "vote mismatch on pattern " << pattern);
  }

  // (c) round temperatures are base, base+0.1, base+0.2.
  for (std::size_t r = 0; r < tb.rounds.size(); ++r) {
    for (const auto& resp : tb.rounds[r]) {
      REQUIRE_TRUE(std::abs(resp.temperature - (0.7 + 0.1 * r)) < 1e-12,
                   "temperature schedule broke at round " << r + 1);
    }
  }
  const double elapsed = ms_since(t0);
  REQUIRE_TRUE(elapsed < 5000.0, "runtime " << elapsed << " ms exceeds 5 s");
}

// ---------------------------------------------------------------- criterion 3
void criterion_graph_construction() {
  const auto w = weights_from({0.5, 0.25, 0.25, 0.0, 0.0});
  for (int rounds : {1, 2, 3}) {
    std::vector<std::vector<std::string>> answers(
        rounds, {"True", "False", "True", "True", "False"});
    const auto g = graph::build_graph(scripted_transcript(answers), w, "True");

    REQUIRE_TRUE(static_cast<int>(g.nodes.size()) == 1 + 5 * rounds, "node count off");
    int root = 0, continuity = 0, influence = 0;
    for (const auto& e : g.edges) {
      switch (e.kind) {
        case graph::EdgeKind::kRoot: ++root; break;
        case graph::EdgeKind::kContinuity: ++continuity; break;
        case graph::EdgeKind::kInfluence: ++influence; break;
      }
      REQUIRE_TRUE(g.nodes[e.dst].round == g.nodes[e.src].round + 1,
                   "edge does not advance the round (DAG violation)");
      if (e.kind == graph::EdgeKind::kInfluence) {
        REQUIRE_TRUE(e.weight == w.normalized.at(g.nodes[e.src].agent_id),
                     "influence weight differs from the influencer's normalized weight");
      } else {
        REQUIRE_TRUE(e.weight == 1.0, "root/continuity weight must be 1");
      }
    }
    REQUIRE_TRUE(root == 5, "ROOT count " << root);
    REQUIRE_TRUE(continuity == 5 * (rounds - 1), "CONTINUITY count " << continuity);
    REQUIRE_TRUE(influence == 20 * (rounds - 1), "INFLUENCE count " << influence);
  }
}

// ---------------------------------------------------------------- criterion 4
void criterion_spectral_pe() {
#if !defined(SMAGDI_HAVE_EIGEN)
  throw Failure("Eigen oracle unavailable on this host");
#else
  SplitMix64 rng(4001);
  const int k = 4;
  int tested = 0, attempts = 0;
  while (tested < 20 && attempts < 500) {
    ++attempts;
    const int n = 5 + static_cast<int>(rng.next_below(8));  // 5..12 nodes
    graph::InteractionGraph g;
    g.nodes.resize(n);
    for (int i = 0; i < n; ++i) {
      g.nodes[i].node_id = i;
      g.nodes[i].kind = i == 0 ? graph::NodeKind::kQuestion : graph::NodeKind::kResponse;
    }
    for (int i = 1; i < n; ++i) {
      g.edges.push_back({static_cast<int>(rng.next_below(i)), i, graph::EdgeKind::kRoot, 1.0});
    }
    for (int e = 0; e < n / 2; ++e) {
      const int a = static_cast<int>(rng.next_below(n));
      const int b = static_cast<int>(rng.next_below(n));
      if (a != b) {
        g.edges.push_back({std::min(a, b), std::max(a, b), graph::EdgeKind::kInfluence, 0.5});
      }
    }

    // Oracle Laplacian + eigendecomposition via Eigen.
    Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : g.edges) {
      if (e.src == e.dst) continue;
      adj(e.src, e.dst) = 1.0;
      adj(e.dst, e.src) = 1.0;
    }
    Eigen::VectorXd dinv(n);
    for (int i = 0; i < n; ++i) {
      const double deg = adj.row(i).sum();
      dinv(i) = deg > 0 ? 1.0 / std::sqrt(deg) : 0.0;
    }
    Eigen::MatrixXd lap = Eigen::MatrixXd::Identity(n, n);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        if (adj(i, j) != 0.0) lap(i, j) -= dinv(i) * adj(i, j) * dinv(j);
      }
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(lap);

    // Componentwise comparison needs a simple nonzero spectrum (eigenvectors
    // of repeated eigenvalues are only defined up to rotation). The k-th
    // selected eigenvalue must also be separated from its successor, and no
    // eigenvalue may straddle the zero threshold.
    std::vector<int> nonzero_idx;
    bool boundary = false;
    for (int i = 0; i < n; ++i) {
      const double ev = solver.eigenvalues()(i);
      if (ev > 1e-8 && ev < 1e-6) boundary = true;
      if (ev > 1e-8) nonzero_idx.push_back(i);
    }
    if (boundary || static_cast<int>(nonzero_idx.size()) < k) continue;
    bool simple = true;
    for (int c = 0; c < k; ++c) {
      const double ev = solver.eigenvalues()(nonzero_idx[c]);
      const double next = c + 1 < static_cast<int>(nonzero_idx.size())
                              ? solver.eigenvalues()(nonzero_idx[c + 1])
                              : ev + 1.0;
      if (next - ev < 1e-6) {
        simple = false;
        break;
      }
    }
    if (!simple) continue;

    const auto pe = graph::laplacian_pe(g, k);
    for (int c = 0; c < k; ++c) {
      Eigen::VectorXd v = solver.eigenvectors().col(nonzero_idx[c]);
      for (int i = 0; i < n; ++i) {
        if (std::abs(v(i)) > 1e-10) {
          if (v(i) < 0) v = -v;
          break;
        }
      }
      for (int i = 0; i < n; ++i) {
        REQUIRE_TRUE(std::abs(pe(i, c) - v(i)) < 1e-6,
                     "PE component (" << i << "," << c << ") off by "
                                      << std::abs(pe(i, c) - v(i)));
      }
    }
    for (int a = 0; a < k; ++a) {
      for (int b = 0; b < k; ++b) {
        double dot = 0.0;
        for (int i = 0; i < n; ++i) dot += pe(i, a) * pe(i, b);
        REQUIRE_TRUE(std::abs(dot - (a == b ? 1.0 : 0.0)) < 1e-6, "PE not orthonormal");
      }
    }
    ++tested;
  }
  REQUIRE_TRUE(tested == 20, "only " << tested << " simple-spectrum graphs sampled");
#endif
}

// ---------------------------------------------------------------- criterion 5
void criterion_gcn() {
  SplitMix64 rng(5001);

  // Forward pass vs a dense index-loop oracle on random small graphs.
  auto dense_mm = [](const nn::Mat& x, const nn::Mat& y) {
    nn::Mat out(x.rows(), y.cols());
    for (int i = 0; i < x.rows(); ++i) {
      for (int j = 0; j < y.cols(); ++j) {
        double acc = 0.0;
        for (int l = 0; l < x.cols(); ++l) acc += x(i, l) * y(l, j);
        out(i, j) = acc;
      }
    }
    return out;
  };
  auto manual_batch = [](nn::Mat feat, nn::Mat adj, std::vector<double> labels,
                         std::vector<std::uint8_t> mask) {
    graph::GraphBatch b;
    b.batch_size = 1;
    b.max_nodes = feat.rows();
    b.feature_dim = feat.cols();
    b.node_features.push_back(std::move(feat));
    b.adjacency.push_back(std::move(adj));
    b.labels = std::move(labels);
    b.node_mask = mask;
    b.label_mask = std::move(mask);
    return b;
  };

  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + static_cast<int>(rng.next_below(6));
    const int fdim = 4, hidden = 6;
    nn::Mat feat = nn::Mat::gaussian(n, fdim, rng, 1.0);
    nn::Mat adj(n, n);
    for (int i = 0; i < n; ++i) {
      adj(i, i) = 0.5;
      for (int j = i + 1; j < n; ++j) {
        if (rng.next_below(2) == 0) {
          adj(i, j) = 0.25;
          adj(j, i) = 0.25;
        }
      }
    }
    gcn::GCNConfig cfg{fdim, hidden, 2};
    auto params = gcn::GCNParams::init(cfg, rng);
    std::vector<double> labels(n, 1.0);
    std::vector<std::uint8_t> mask(n, 1);
    const auto ours =
        gcn::gcn_forward(manual_batch(feat, adj, labels, mask), params)[0];

    nn::Mat h = dense_mm(adj, dense_mm(feat, params.layer_weights[0]));
    for (auto& v : h.flat()) v = v > 0 ? v : 0;
    const nn::Mat expect = dense_mm(adj, dense_mm(h, params.layer_weights[1]));
    for (std::size_t i = 0; i < expect.size(); ++i) {
      REQUIRE_TRUE(std::abs(ours.flat()[i] - expect.flat()[i]) < 1e-5,
                   "forward differs from the dense oracle");
    }
  }

  // Exact permutation equivariance: dyadic inputs keep every intermediate sum
  // exactly representable, so reordered accumulation is bit-identical.
  {
    const int n = 6, fdim = 4, hidden = 8;
    auto dyadic = [&rng](int r, int c) {
      nn::Mat m(r, c);
      for (auto& v : m.flat()) {
        v = static_cast<double>(static_cast<int>(rng.next_below(17)) - 8) / 16.0;
      }
      return m;
    };
    nn::Mat feat = dyadic(n, fdim);
    nn::Mat adj(n, n);
    for (int i = 0; i < n; ++i) {
      adj(i, i) = 1.0;
      for (int j = i + 1; j < n; ++j) {
        if (rng.next_below(2) == 0) {
          adj(i, j) = 0.5;
          adj(j, i) = 0.5;
        }
      }
    }
    gcn::GCNConfig cfg{fdim, hidden, 2};
    auto params = gcn::GCNParams::init(cfg, rng);
    params.layer_weights[0] = dyadic(fdim, hidden);
    params.layer_weights[1] = dyadic(hidden, hidden);

    const std::vector<int> perm{3, 0, 5, 1, 4, 2};
    nn::Mat pfeat(n, fdim), padj(n, n);
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < fdim; ++c) pfeat(perm[i], c) = feat(i, c);
      for (int j = 0; j < n; ++j) padj(perm[i], perm[j]) = adj(i, j);
    }
    std::vector<double> ones(n, 1.0);
    std::vector<std::uint8_t> mask(n, 1);
    const auto base = gcn::gcn_forward(manual_batch(feat, adj, ones, mask), params)[0];
    const auto permuted = gcn::gcn_forward(manual_batch(pfeat, padj, ones, mask), params)[0];
    for (int i = 0; i < n; ++i) {
      for (int c = 0; c < hidden; ++c) {
        REQUIRE_TRUE(permuted(perm[i], c) == base(i, c),
                     "permutation equivariance not exact at (" << i << "," << c << ")");
      }
    }
  }

  // Finite-difference gradient check on every parameter of a 2-layer / 8-dim
  // instance, at 64-bit precision.
  {
    gcn::GCNConfig cfg{4, 8, 2};
    auto params = gcn::GCNParams::init(cfg, rng);
    nn::Mat feat = nn::Mat::gaussian(6, 4, rng, 1.0);
    nn::Mat adj(6, 6);
    for (int i = 0; i < 6; ++i) {
      adj(i, i) = 0.5;
      if (i + 1 < 6) {
        adj(i, i + 1) = 0.25;
        adj(i + 1, i) = 0.25;
      }
    }
    std::vector<double> labels{1, 0, 1, 1, 0, 1};
    std::vector<std::uint8_t> mask(6, 1);
    const auto batch = manual_batch(feat, adj, labels, mask);

    nn::Tape tape;
    auto vars = gcn::gcn_param_vars(tape, params, true);
    tape.backward(gcn::gcn_node_loss(tape, batch, vars, cfg));

    auto loss_of = [&]() {
      const auto logits = gcn::node_logits(gcn::gcn_forward(batch, params), params, batch);
      return losses::node_loss(logits, batch.labels, batch.label_mask, 1);
    };
    std::vector<nn::Mat*> tensors{&params.layer_weights[0], &params.layer_weights[1],
                                  &params.classifier_w, &params.classifier_b};
    for (std::size_t p = 0; p < tensors.size(); ++p) {
      const nn::Mat analytic = tape.grad(vars[p]);
      const auto res = testsupport::finite_diff_check(loss_of, *tensors[p], analytic);
      REQUIRE_TRUE(res.max_rel_err <= 1e-4,
                   "gradient rel err " << res.max_rel_err << " on tensor " << p);
    }
  }
}

// ---------------------------------------------------------------- criterion 6
void criterion_losses() {
  // Closed forms.
  {
    nn::Mat logits(1, 4, 0.25);
    REQUIRE_TRUE(std::abs(losses::lm_loss(logits, std::vector<int>{2},
                                          std::vector<std::uint8_t>{1}) -
                          std::log(4.0)) < 1e-12,
                 "uniform lm_loss != ln 4");
  }
  REQUIRE_TRUE(std::abs(losses::node_loss(std::vector<double>{0.0}, std::vector<double>{1.0},
                                          std::vector<std::uint8_t>{1}, 1) -
                        std::log(2.0)) < 1e-12,
               "node_loss at logit 0 != -log 0.5");
  REQUIRE_TRUE(losses::node_loss(std::vector<double>{20.0}, std::vector<double>{1.0},
                                 std::vector<std::uint8_t>{1}, 1) < 1e-8,
               "saturated node_loss not ~0");
  REQUIRE_TRUE(losses::contrastive_loss(std::vector<double>{2.0}, std::vector<double>{0.0}) ==
                   0.0,
               "satisfied hinge not 0");
  REQUIRE_TRUE(losses::contrastive_loss(std::vector<double>{0.7}, std::vector<double>{0.7}) ==
                   1.0,
               "zero-separation hinge not 1");
  REQUIRE_TRUE(std::abs(losses::contrastive_loss(std::vector<double>{2.0, 1.0},
                                                 std::vector<double>{0.0, 1.0}) -
                        0.5) < 1e-15,
               "hinge mean off");
  {
    nn::Mat a(1, 2);
    a(0, 0) = 1.0;
    REQUIRE_TRUE(losses::alignment_loss(a, nn::Mat(1, 2)) == 1.0, "alignment closed form off");
    REQUIRE_TRUE(losses::alignment_loss(a, a) == 0.0, "alignment of identical inputs not 0");
  }

  // Total with unit components and default coefficients is exactly 2.6.
  const auto bundle = losses::total_loss(1.0, 1.0, 1.0, 1.0, {});
  REQUIRE_TRUE(bundle.total == 2.6, "total_loss(1,1,1,1) != 2.6 exactly");

  // Finite-difference gradient checks for every loss.
  SplitMix64 rng(6001);
  {
    nn::Mat logits = nn::Mat::gaussian(4, 6, rng, 1.0);
    const std::vector<int> targets{2, 5, 0, 1};
    const std::vector<std::uint8_t> mask{1, 0, 1, 1};
    const nn::Mat analytic = losses::lm_loss_grad(logits, targets, mask);
    auto fn = [&]() { return losses::lm_loss(logits, targets, mask); };
    REQUIRE_TRUE(testsupport::finite_diff_check(fn, logits, analytic).max_rel_err <= 1e-4,
                 "lm_loss gradient check failed");
  }
  {
    nn::Mat logits = nn::Mat::gaussian(6, 1, rng, 1.0);
    const std::vector<double> labels{1, 0, 1, 1, 0, 0};
    const std::vector<std::uint8_t> mask{1, 1, 0, 1, 1, 1};
    const auto g = losses::node_loss_grad(logits.flat(), labels, mask, 2);
    nn::Mat analytic(6, 1);
    for (int i = 0; i < 6; ++i) analytic(i, 0) = g[i];
    auto fn = [&]() { return losses::node_loss(logits.flat(), labels, mask, 2); };
    REQUIRE_TRUE(testsupport::finite_diff_check(fn, logits, analytic).max_rel_err <= 1e-4,
                 "node_loss gradient check failed");
  }
  {
    nn::Mat pos(3, 1), neg(3, 1);
    pos(0, 0) = 2.4;
    neg(0, 0) = 0.2;
    pos(1, 0) = 0.3;
    neg(1, 0) = 0.5;
    pos(2, 0) = -1.0;
    neg(2, 0) = 0.0;
    std::vector<double> dp(3), dn(3);
    losses::contrastive_loss_grad(pos.flat(), neg.flat(), dp, dn);
    nn::Mat ap(3, 1), an(3, 1);
    for (int i = 0; i < 3; ++i) {
      ap(i, 0) = dp[i];
      an(i, 0) = dn[i];
    }
    auto fn = [&]() { return losses::contrastive_loss(pos.flat(), neg.flat()); };
    REQUIRE_TRUE(testsupport::finite_diff_check(fn, pos, ap).max_rel_err <= 1e-4,
                 "contrastive gradient (positives) failed");
    REQUIRE_TRUE(testsupport::finite_diff_check(fn, neg, an).max_rel_err <= 1e-4,
                 "contrastive gradient (negatives) failed");
  }
  {
    nn::Mat zd = nn::Mat::gaussian(3, 5, rng, 1.0);
    nn::Mat zs = nn::Mat::gaussian(3, 5, rng, 1.0);
    nn::Mat dd, ds;
    losses::alignment_loss_grad(zd, zs, dd, ds);
    auto fn = [&]() { return losses::alignment_loss(zd, zs); };
    REQUIRE_TRUE(testsupport::finite_diff_check(fn, zd, dd).max_rel_err <= 1e-4,
                 "alignment gradient failed");
  }
}

// ---------------------------------------------------------------- criterion 7
void criterion_extraction() {
  const auto w = weights_from({0.8, 0.8, 0.8, 0.8, 0.8});

  const auto g1 = graph::build_graph(
      scripted_transcript({{"True", "True", "True", "False", "False"}}), w, "True");
  agents::MockBackend empty_backend;
  const auto xs = distill::extract_examples(g1, empty_backend);
  int pos = 0, neg = 0;
  for (const auto& x : xs) {
    pos += x.kind == distill::ExampleKind::kPositive ? 1 : 0;
    neg += x.kind == distill::ExampleKind::kNegative ? 1 : 0;
  }
  REQUIRE_TRUE(pos == 3, "expected 3 POSITIVE, got " << pos);
  REQUIRE_TRUE(neg == 2, "expected 2 NEGATIVE, got " << neg);

  // Path enumeration vs a recursive DFS oracle for 1..3 rounds.
  std::function<void(const graph::InteractionGraph&, int, std::vector<int>&,
                     std::set<std::vector<int>>&)>
      dfs = [&](const graph::InteractionGraph& g, int node, std::vector<int>& path,
                std::set<std::vector<int>>& out) {
        path.push_back(node);
        bool leaf = true;
        for (const auto& e : g.edges) {
          if (e.src == node) {
            leaf = false;
            dfs(g, e.dst, path, out);
          }
        }
        if (leaf) out.insert(path);
        path.pop_back();
      };
  for (int rounds : {1, 2, 3}) {
    std::vector<std::vector<std::string>> answers(
        rounds, {"True", "False", "True", "True", "False"});
    const auto g = graph::build_graph(scripted_transcript(answers), w, "True");
    const auto paths = distill::enumerate_paths(g);
    std::set<std::vector<int>> oracle;
    std::vector<int> stack;
    dfs(g, 0, stack, oracle);
    REQUIRE_TRUE(paths.size() == oracle.size(),
                 "path count mismatch at R=" << rounds << ": " << paths.size() << " vs "
                                             << oracle.size());
    for (const auto& p : paths) {
      REQUIRE_TRUE(oracle.count(p) == 1, "path missing from the DFS oracle");
    }
  }
}

// ---------------------------------------------------------------- criterion 8
void criterion_desk_distillation(std::ostream& detail) {
  const auto t0 = Clock::now();

  const auto fx = fixtures::make_debate_fixture({25, 42});
  auto mock = agents::MockBackend::from_json(fx.mock_script);
  const auto& roster = agents::default_roster();

  std::vector<harness::QuestionRecord> calib(fx.questions.begin(), fx.questions.begin() + 5);
  const auto weights = debate::calibrate(roster, mock, calib, {});

  std::vector<graph::InteractionGraph> graphs;
  graph::HashingEmbedder embedder(64);
  for (int i = 0; i < 20; ++i) {
    const auto transcript = debate::run_debate(fx.questions[i], roster, mock, weights, {});
    auto g = graph::build_graph(transcript, weights, fx.questions[i].gold);
    graph::attach_semantic_embeddings(g, embedder);
    graph::attach_positional_encodings(g, 8);
    graphs.push_back(std::move(g));
  }
  REQUIRE_TRUE(graphs.size() == 20, "expected 20 graphs");

  distill::StudentConfig sc;  // tiny reference defaults
  auto student = distill::StudentUnit::build_tiny(sc, 42);
  REQUIRE_TRUE(student.num_params() <= 200000,
               "student has " << student.num_params() << " params (> 200k)");
  SplitMix64 rng(42);
  auto gcn_params = gcn::GCNParams::init({72, 32, 2}, rng);

  distill::TrainConfig tc;
  tc.learning_rate = 1e-3;  // tiny-student rate; 5e-5 targets adapter-scale LMs
  tc.epochs = 20;
  tc.batch_size = 8;
  tc.seed = 42;
  tc.early_stopping_patience = 0;
  const auto result = distill::train(graphs, student, gcn_params, tc, mock);

  REQUIRE_TRUE(result.history.size() == 20, "expected 20 epochs");
  for (const auto& e : result.history) {
    REQUIRE_TRUE(std::isfinite(e.lm) && std::isfinite(e.node) && std::isfinite(e.contrast) &&
                     std::isfinite(e.align) && std::isfinite(e.total),
                 "non-finite loss component at epoch " << e.epoch);
  }
  REQUIRE_TRUE(result.final_total <= 0.5 * result.initial_total,
               "final total " << result.final_total << " not <= half of initial "
                              << result.initial_total);
  const double elapsed = ms_since(t0);
  REQUIRE_TRUE(elapsed < 600000.0, "runtime " << elapsed / 1000 << " s exceeds 10 min");
  detail << "total " << result.initial_total << " -> " << result.final_total << ", "
         << student.num_params() << " params, " << elapsed / 1000 << " s";
}

// ---------------------------------------------------------------- criterion 9
void criterion_cli_determinism(std::ostream& detail) {
  const std::string cli = SMAGDI_CLI_PATH;
  REQUIRE_TRUE(std::filesystem::exists(cli), "CLI binary missing at " << cli);
  const std::string dir = temp_dir("smagdi_acceptance_e2e");

  auto sh = [&](const std::string& cmd) {
    const std::string full = cmd + " >/dev/null 2>&1";
    const int rc = std::system(full.c_str());
    REQUIRE_TRUE(rc == 0, "command failed (" << rc << "): " << cmd);
  };

  sh(cli + " make-fixture --out-dir " + dir + "/fx --num-questions 25 --seed 42");
  for (const std::string run : {"a", "b"}) {
    const std::string r = dir + "/" + run;
    std::filesystem::create_directories(r);
    sh(cli + " debate --dataset strategyqa --dataset-path " + dir +
       "/fx/dataset.jsonl --split train --backend mock --mock-script " + dir +
       "/fx/mock.json --weights-out " + r + "/weights.json --transcripts-out " + r +
       "/transcripts.jsonl --graphs-out " + r + "/graphs.jsonl --calibration-size 10 --seed 42");
    sh(cli + " distill --graphs " + r + "/graphs.jsonl --out-dir " + r +
       "/model --backend mock --mock-script " + dir +
       "/fx/mock.json --epochs 3 --lr 1e-3 --seed 42 --patience 0");
    sh(cli + " infer --checkpoint " + r + "/model/student.ckpt --dataset strategyqa "
       "--dataset-path " + dir + "/fx/dataset.jsonl --split test --seed 42 --traces-out " + r +
       "/traces.jsonl --max-tokens 96");
    sh(cli + " eval --traces " + r + "/traces.jsonl --dataset strategyqa --dataset-path " + dir +
       "/fx/dataset.jsonl --split test --seed 42 --report-out " + r + "/metrics.json");
  }

  auto slurp = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string ma = slurp(dir + "/a/metrics.json");
  const std::string mb = slurp(dir + "/b/metrics.json");
  REQUIRE_TRUE(!ma.empty(), "metrics JSON missing");
  REQUIRE_TRUE(ma == mb, "metrics JSON differs between identical runs");
  REQUIRE_TRUE(slurp(dir + "/a/traces.jsonl") == slurp(dir + "/b/traces.jsonl"),
               "traces differ between identical runs");
  detail << "metrics bit-identical across runs (" << ma.size() << " bytes)";
  std::filesystem::remove_all(dir);
}

// --------------------------------------------------------------- criterion 10
void criterion_splits() {
  std::vector<harness::QuestionRecord> records;
  for (int i = 0; i < 2290; ++i) {
    harness::QuestionRecord q;
    q.question_id = "r" + std::to_string(i);
    q.text = "Q" + std::to_string(i);
    q.answer_space = harness::boolean_answer_space();
    q.gold = i % 2 ? "True" : "False";
    records.push_back(std::move(q));
  }
  harness::SplitSpec spec;  // 0.8 / seed 42
  auto [train, test] = harness::split(records, spec);
  REQUIRE_TRUE(train.size() == 1832, "train size " << train.size() << " != 1832");
  REQUIRE_TRUE(test.size() == 458, "test size " << test.size() << " != 458");

  auto [train2, test2] = harness::split(records, spec);
  for (std::size_t i = 0; i < train.size(); ++i) {
    REQUIRE_TRUE(train[i].question_id == train2[i].question_id,
                 "seed-42 rerun changed train membership at " << i);
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    REQUIRE_TRUE(test[i].question_id == test2[i].question_id,
                 "seed-42 rerun changed test membership at " << i);
  }
}

// --------------------------------------------------------------- criterion 11
void criterion_scot() {
  // Scripted decomposer-solver reproducing the five-decomposition boolean
  // fixture shape; the final composition must extract to True.
  auto dec = std::make_shared<fixtures::ScriptedLM>();
  dec->add_rule("Break this down",
                "1. What do we mean by the campaign's success?\n"
                "2. What was the involvement in the region?\n"
                "3. Did the region contribute directly?\n"
                "4. Could the area have had indirect importance?\n"
                "5. So, was it an important part of the success overall?");
  auto sol = std::make_shared<fixtures::ScriptedLM>();
  sol->add_rule("Based on these answers", "Weighing the sub-answers. Answer: True");
  sol->add_rule("Sub-question: So, was it", "Answer: True");
  sol->set_default_text("a supporting finding");
  auto student = distill::StudentUnit::wrap(dec, sol);

  // Canary corpus standing in for training-example text.
  const std::vector<std::string> canaries{
      "CANARY-7f3a positive chain text. Answer: True",
      "CANARY-99d1 decomposition list entry",
  };
  std::vector<std::string> prompts;
  auto prev = scot::set_prompt_observer([&](const std::string& p) { prompts.push_back(p); });

  auto q = bool_question("scot-fixture");
  q.text = "Was the harbor a part of the campaign's success?";
  const auto trace = scot::infer(student, q, {});

  scot::set_prompt_observer(std::move(prev));

  REQUIRE_TRUE(trace.decomposition.size() == 5, "expected 5 sub-questions");
  REQUIRE_TRUE(trace.final_answer == "True", "final answer " << trace.final_answer);
  REQUIRE_TRUE(!prompts.empty(), "no prompts observed");
  for (const auto& p : prompts) {
    for (const auto& canary : canaries) {
      REQUIRE_TRUE(p.find(canary) == std::string::npos,
                   "canary training text leaked into an inference prompt");
    }
  }
}

struct Criterion {
  int id;
  std::string name;
  std::function<void(std::ostream&)> run;
};

}  // namespace

int main() {
  std::cout << "smagdi acceptance (kernels backend: "
            << kernels::backend_name(kernels::active_backend()) << ")\n";

  const std::vector<Criterion> criteria{
      {1, "weighting: sum-1, eps floor, ordering, worked example, < 1 s",
       [](std::ostream&) { criterion_weighting(); }},
      {2, "debate protocol: consensus, 3-round vote vs oracle, temperatures",
       [](std::ostream&) { criterion_debate_protocol(); }},
      {3, "graph construction: counts, DAG, influence weights",
       [](std::ostream&) { criterion_graph_construction(); }},
      {4, "spectral PE: 20 random graphs vs dense eigen-oracle, orthonormal",
       [](std::ostream&) { criterion_spectral_pe(); }},
      {5, "gcn: dense-oracle forward, exact equivariance, gradient check",
       [](std::ostream&) { criterion_gcn(); }},
      {6, "losses: closed forms, gradient checks, total == 2.6",
       [](std::ostream&) { criterion_losses(); }},
      {7, "example extraction: 3/2 counts, DFS path oracle",
       [](std::ostream&) { criterion_extraction(); }},
      {8, "desk-scale distillation: 20 graphs, 20 epochs, half the loss",
       [](std::ostream& d) { criterion_desk_distillation(d); }},
      {9, "end-to-end CLI determinism: bit-identical metrics",
       [](std::ostream& d) { criterion_cli_determinism(d); }},
      {10, "splits: 2290 -> (1832, 458), stable membership",
       [](std::ostream&) { criterion_splits(); }},
      {11, "scot inference: scripted pipeline -> True, zero-shot canary scan",
       [](std::ostream&) { criterion_scot(); }},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = Clock::now();
    std::ostringstream detail;
    bool ok = true;
    std::string why;
    try {
      c.run(detail);
    } catch (const std::exception& e) {
      ok = false;
      why = e.what();
    }
    const double secs = ms_since(t0) / 1000.0;
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << std::setw(2) << c.id << ": "
              << c.name;
    if (!detail.str().empty()) std::cout << " [" << detail.str() << "]";
    std::cout << " (" << std::fixed << std::setprecision(2) << secs << " s)\n";
    std::cout.unsetf(std::ios::fixed);
    if (!ok) {
      std::cout << "     -> " << why << "\n";
      ++failures;
    }
  }
  std::cout << (failures == 0 ? "all criteria passed" : "criteria failed") << " (" << 11 - failures
            << "/11)\n";
  return failures == 0 ? 0 : 1;
}
