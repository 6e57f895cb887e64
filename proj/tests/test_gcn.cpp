#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smagdi/error.hpp"
#include "smagdi/gcn.hpp"
#include "smagdi/losses.hpp"
#include "smagdi/rng.hpp"
#include "support/gradcheck.hpp"

using namespace smagdi;
using namespace smagdi::gcn;
using nn::Mat;

namespace {

// Hand-assembled batch: features/adjacency written directly, bypassing the
// debate pipeline.
graph::GraphBatch manual_batch(const std::vector<Mat>& features,
                               const std::vector<Mat>& adjacency,
                               const std::vector<std::vector<double>>& labels,
                               const std::vector<std::vector<std::uint8_t>>& node_masks) {
  graph::GraphBatch b;
  b.batch_size = static_cast<int>(features.size());
  b.max_nodes = features[0].rows();
  b.feature_dim = features[0].cols();
  b.node_features = features;
  b.adjacency = adjacency;
  for (int g = 0; g < b.batch_size; ++g) {
    for (int i = 0; i < b.max_nodes; ++i) {
      b.node_mask.push_back(node_masks[g][i]);
      b.labels.push_back(labels[g][i]);
      b.label_mask.push_back(node_masks[g][i]);
    }
  }
  return b;
}

Mat randmat(int r, int c, SplitMix64& rng, double scale = 1.0) {
  Mat m(r, c);
  for (auto& v : m.flat()) v = rng.next_gaussian() * scale;
  return m;
}

// Path graph adjacency with self-loops, symmetric-normalized (oracle form).
Mat normalized_path_adjacency(int n) {
  Mat a(n, n);
  for (int i = 0; i + 1 < n; ++i) {
    a(i, i + 1) = 1.0;
    a(i + 1, i) = 1.0;
  }
  for (int i = 0; i < n; ++i) a(i, i) = 1.0;
  std::vector<double> deg(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) deg[i] += a(i, j);
  Mat out(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) out(i, j) = a(i, j) / std::sqrt(deg[i] * deg[j]);
  return out;
}

}  // namespace

TEST_CASE("identity weights on a single self-looped node pass features through") {
  const int d = 3;
  Mat feat(1, d);
  feat(0, 0) = 0.5;
  feat(0, 1) = -0.7;
  feat(0, 2) = 2.0;
  Mat adj(1, 1);
  adj(0, 0) = 1.0;

  GCNConfig cfg{d, d, 2};
  SplitMix64 rng(1);
  auto params = GCNParams::init(cfg, rng);
  for (auto& w : params.layer_weights) {
    w.fill(0.0);
    for (int i = 0; i < d; ++i) w(i, i) = 1.0;
  }

  const auto batch = manual_batch({feat}, {adj}, {{1.0}}, {{1}});
  const auto embeddings = gcn_forward(batch, params);
  // Two identity layers with a ReLU in between: output = relu(features).
  CHECK(embeddings[0](0, 0) == doctest::Approx(0.5));
  CHECK(embeddings[0](0, 1) == doctest::Approx(0.0));
  CHECK(embeddings[0](0, 2) == doctest::Approx(2.0));
}

TEST_CASE("zero input features propagate to zero embeddings (no bias in layers)") {
  SplitMix64 rng(2);
  GCNConfig cfg{4, 8, 2};
  auto params = GCNParams::init(cfg, rng);
  const auto batch = manual_batch({Mat(3, 4)}, {normalized_path_adjacency(3)},
                                  {{1.0, 0.0, 1.0}}, {{1, 1, 1}});
  const auto embeddings = gcn_forward(batch, params);
  for (const auto& v : embeddings[0].flat()) CHECK(v == 0.0);
}

TEST_CASE("3-node path with random params matches a dense loop oracle") {
  SplitMix64 rng(3);
  GCNConfig cfg{5, 7, 2};
  auto params = GCNParams::init(cfg, rng);
  const Mat feat = randmat(3, 5, rng);
  const Mat adj = normalized_path_adjacency(3);
  const auto batch = manual_batch({feat}, {adj}, {{1, 0, 1}}, {{1, 1, 1}});
  const auto ours = gcn_forward(batch, params)[0];

  // Oracle: explicit index loops, no shared matmul code.
  auto dense_mm = [](const Mat& x, const Mat& y) {
    Mat out(x.rows(), y.cols());
    for (int i = 0; i < x.rows(); ++i)
      for (int j = 0; j < y.cols(); ++j) {
        double acc = 0.0;
        for (int l = 0; l < x.cols(); ++l) acc += x(i, l) * y(l, j);
        out(i, j) = acc;
      }
    return out;
  };
  Mat h = dense_mm(adj, dense_mm(feat, params.layer_weights[0]));
  for (auto& x : h.flat()) x = x > 0 ? x : 0;
  Mat h2 = dense_mm(adj, dense_mm(h, params.layer_weights[1]));
  for (std::size_t i = 0; i < h2.size(); ++i) {
    CHECK(std::abs(ours.flat()[i] - h2.flat()[i]) < 1e-5);
  }
}

TEST_CASE("node_logits: affine head probes") {
  GCNConfig cfg{2, 2, 1};
  SplitMix64 rng(4);
  auto params = GCNParams::init(cfg, rng);
  params.classifier_w.fill(0.0);
  params.classifier_w(0, 0) = 1.0;  // e_1 probe
  params.classifier_b(0, 0) = 0.0;

  std::vector<Mat> embeddings{Mat(2, 2)};
  embeddings[0](0, 0) = 3.0;  // hidden (3, 0)
  graph::GraphBatch batch;
  batch.batch_size = 1;
  batch.max_nodes = 2;
  batch.feature_dim = 2;
  batch.node_mask = {1, 1};
  batch.labels = {1.0, 0.0};
  batch.label_mask = {1, 1};

  const auto logits = node_logits(embeddings, params, batch);
  CHECK(logits[0] == doctest::Approx(3.0));
  // Zero embedding, zero bias: logit 0 means probability one half.
  CHECK(logits[1] == doctest::Approx(0.0));
  CHECK(1.0 / (1.0 + std::exp(-logits[1])) == doctest::Approx(0.5));
}

TEST_CASE("gcn is permutation equivariant") {
  SplitMix64 rng(5);
  GCNConfig cfg{4, 6, 2};
  auto params = GCNParams::init(cfg, rng);
  const int n = 5;
  const Mat feat = randmat(n, 4, rng);
  Mat adj = normalized_path_adjacency(n);

  const std::vector<int> perm{3, 0, 4, 1, 2};
  Mat pfeat(n, 4), padj(n, n);
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 4; ++c) pfeat(perm[i], c) = feat(i, c);
    for (int j = 0; j < n; ++j) padj(perm[i], perm[j]) = adj(i, j);
  }

  std::vector<double> ones(n, 1.0);
  std::vector<std::uint8_t> mask(n, 1);
  const auto base =
      gcn_forward(manual_batch({feat}, {adj}, {ones}, {mask}), params)[0];
  const auto permuted =
      gcn_forward(manual_batch({pfeat}, {padj}, {ones}, {mask}), params)[0];
  for (int i = 0; i < n; ++i) {
    for (int c = 0; c < 6; ++c) {
      CHECK(permuted(perm[i], c) == doctest::Approx(base(i, c)).epsilon(1e-12));
    }
  }
}

TEST_CASE("padding isolation: masked rows stay zero and do not leak") {
  SplitMix64 rng(6);
  GCNConfig cfg{4, 6, 2};
  auto params = GCNParams::init(cfg, rng);

  // 3 real nodes padded to 5; adjacency zero across the mask boundary.
  Mat feat(5, 4);
  const Mat real = randmat(3, 4, rng);
  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 4; ++c) feat(i, c) = real(i, c);
  Mat adj(5, 5);
  const Mat small = normalized_path_adjacency(3);
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) adj(i, j) = small(i, j);

  const auto padded = gcn_forward(
      manual_batch({feat}, {adj}, {{1, 0, 1, 0, 0}}, {{1, 1, 1, 0, 0}}), params)[0];
  const auto exact = gcn_forward(
      manual_batch({real}, {small}, {{1, 0, 1}}, {{1, 1, 1}}), params)[0];

  for (int i = 0; i < 3; ++i)
    for (int c = 0; c < 6; ++c) CHECK(padded(i, c) == doctest::Approx(exact(i, c)));
  for (int i = 3; i < 5; ++i)
    for (int c = 0; c < 6; ++c) CHECK(padded(i, c) == 0.0);
}

TEST_CASE("batch forward equals per-graph forward") {
  SplitMix64 rng(7);
  GCNConfig cfg{3, 5, 2};
  auto params = GCNParams::init(cfg, rng);
  const Mat f1 = randmat(4, 3, rng);
  const Mat f2 = randmat(4, 3, rng);
  const Mat adj = normalized_path_adjacency(4);
  std::vector<double> ones(4, 1.0);
  std::vector<std::uint8_t> mask(4, 1);

  const auto both = gcn_forward(
      manual_batch({f1, f2}, {adj, adj}, {ones, ones}, {mask, mask}), params);
  const auto solo1 = gcn_forward(manual_batch({f1}, {adj}, {ones}, {mask}), params)[0];
  const auto solo2 = gcn_forward(manual_batch({f2}, {adj}, {ones}, {mask}), params)[0];
  CHECK(both[0] == solo1);
  CHECK(both[1] == solo2);

  const auto logits_batch = node_logits(both, params, manual_batch({f1, f2}, {adj, adj},
                                                                   {ones, ones}, {mask, mask}));
  const auto logits_solo = node_logits({solo1}, params, manual_batch({f1}, {adj}, {ones}, {mask}));
  for (int i = 0; i < 4; ++i) CHECK(logits_batch[i] == doctest::Approx(logits_solo[i]));
}

TEST_CASE("autograd gcn loss equals the pure-forward loss") {
  SplitMix64 rng(8);
  GCNConfig cfg{3, 5, 2};
  auto params = GCNParams::init(cfg, rng);
  const Mat feat = randmat(4, 3, rng);
  const Mat adj = normalized_path_adjacency(4);
  const auto batch = manual_batch({feat}, {adj}, {{1, 0, 1, 1}}, {{1, 1, 1, 1}});

  nn::Tape tape;
  auto vars = gcn_param_vars(tape, params, true);
  const auto loss_var = gcn_node_loss(tape, batch, vars, cfg);

  const auto logits = node_logits(gcn_forward(batch, params), params, batch);
  const double loss = losses::node_loss(logits, batch.labels, batch.label_mask, 1);
  CHECK(tape.value(loss_var)(0, 0) == doctest::Approx(loss).epsilon(1e-12));
}

TEST_CASE("finite-difference gradient check on every parameter (2-layer, 8-dim)") {
  SplitMix64 rng(9);
  GCNConfig cfg{4, 8, 2};
  auto params = GCNParams::init(cfg, rng);

  // 6-node batch: two graphs of 3 nodes each.
  const Mat f1 = randmat(3, 4, rng);
  const Mat f2 = randmat(3, 4, rng);
  const Mat adj = normalized_path_adjacency(3);
  const auto batch =
      manual_batch({f1, f2}, {adj, adj}, {{1, 0, 1}, {0, 1, 1}}, {{1, 1, 1}, {1, 1, 1}});

  auto loss_of = [&]() {
    const auto logits = node_logits(gcn_forward(batch, params), params, batch);
    return losses::node_loss(logits, batch.labels, batch.label_mask, batch.batch_size);
  };

  nn::Tape tape;
  auto vars = gcn_param_vars(tape, params, true);
  tape.backward(gcn_node_loss(tape, batch, vars, cfg));

  std::vector<Mat*> tensors{&params.layer_weights[0], &params.layer_weights[1],
                            &params.classifier_w, &params.classifier_b};
  for (std::size_t p = 0; p < tensors.size(); ++p) {
    const Mat analytic = tape.grad(vars[p]);
    const auto res = testsupport::finite_diff_check(loss_of, *tensors[p], analytic);
    CHECK(res.checked == static_cast<int>(tensors[p]->size()));
    CHECK(res.max_rel_err <= 1e-4);
  }
}

TEST_CASE("dimension mismatches are rejected") {
  SplitMix64 rng(10);
  GCNConfig cfg{4, 8, 2};
  auto params = GCNParams::init(cfg, rng);
  const auto batch = manual_batch({Mat(3, 7)}, {normalized_path_adjacency(3)},
                                  {{1, 1, 1}}, {{1, 1, 1}});
  CHECK_THROWS_AS(gcn_forward(batch, params), ValidationError);
}
