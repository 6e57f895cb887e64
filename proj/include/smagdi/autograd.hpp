#pragma once

#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "smagdi/mat.hpp"

namespace smagdi::nn {

struct Var {
  int idx{-1};
};

// Dynamic reverse-mode tape over Mat values. One tape per optimization step;
// nodes are created in topological order, backward walks them in reverse.
class Tape {
 public:
  Var input(Mat value, bool requires_grad = false);

  const Mat& value(Var v) const { return nodes_[v.idx].value; }
  // Gradient accumulated by backward(); zeros when the node was never reached.
  const Mat& grad(Var v);

  Var matmul(Var a, Var b);     // A * B
  Var matmul_nt(Var a, Var b);  // A * B^T
  Var add(Var a, Var b);
  Var add_rowvec(Var a, Var bias);  // bias [1 x C] broadcast over rows
  Var mul(Var a, Var b);            // elementwise
  Var scale(Var a, double s);
  Var relu(Var a);
  Var rmsnorm(Var a, double eps = 1e-5);
  // Row softmax of (a + additive_mask); the mask is a constant.
  Var softmax_rows(Var a, const Mat* additive_mask = nullptr);
  Var embed_rows(Var table, std::vector<int> ids);
  Var mean_rows(Var a);  // [R x C] -> [1 x C]
  Var concat_rows(const std::vector<Var>& parts);

  // Fused loss heads ([1 x 1] outputs); forward/backward delegate to the
  // closed-form implementations in smagdi::losses.
  Var cross_entropy_mean(Var logits, std::vector<int> targets,
                         std::vector<std::uint8_t> mask);
  Var bce_sum_div(Var logits, Mat labels, std::vector<std::uint8_t> mask, int num_graphs);
  Var hinge_pairs_mean(Var pos, Var neg);  // [N x 1] score columns
  Var mse_mean_rows(Var a, Var b);
  Var weighted_sum(const std::vector<std::pair<double, Var>>& terms);

  void backward(Var scalar_loss);

  std::size_t node_count() const { return nodes_.size(); }

 private:
  struct Node {
    Mat value;
    Mat grad;  // lazily allocated
    bool requires_grad{false};
    std::function<void(Tape&)> back;
  };

  std::vector<Node> nodes_;

  Var emplace(Mat value, bool requires_grad, std::function<void(Tape&)> back);
  Mat& grad_mut(int idx);
  bool wants(Var v) const { return nodes_[v.idx].requires_grad; }
};

}  // namespace smagdi::nn
