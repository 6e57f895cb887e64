#pragma once

#include <span>
#include <vector>

#include "smagdi/rng.hpp"

namespace smagdi::nn {

// Dense row-major double matrix. The unit of all trainable state.
class Mat {
 public:
  Mat() = default;
  Mat(int rows, int cols, double fill = 0.0);

  static Mat row(std::span<const double> values);
  static Mat column(std::span<const double> values);
  // i.i.d. N(0, std^2) entries drawn from the frozen RNG stream.
  static Mat gaussian(int rows, int cols, SplitMix64& rng, double std_dev);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  std::size_t size() const { return d_.size(); }
  bool empty() const { return d_.empty(); }

  double& operator()(int r, int c) { return d_[static_cast<std::size_t>(r) * cols_ + c]; }
  double operator()(int r, int c) const { return d_[static_cast<std::size_t>(r) * cols_ + c]; }

  double* data() { return d_.data(); }
  const double* data() const { return d_.data(); }
  double* row_ptr(int r) { return d_.data() + static_cast<std::size_t>(r) * cols_; }
  const double* row_ptr(int r) const { return d_.data() + static_cast<std::size_t>(r) * cols_; }

  std::span<double> flat() { return {d_.data(), d_.size()}; }
  std::span<const double> flat() const { return {d_.data(), d_.size()}; }

  bool same_shape(const Mat& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }
  void fill(double v);
  bool all_finite() const;

  friend bool operator==(const Mat& a, const Mat& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.d_ == b.d_;
  }

 private:
  int rows_{0};
  int cols_{0};
  std::vector<double> d_;
};

// Kernel-backed products. Shapes are validated; mismatches throw ValidationError.
Mat matmul(const Mat& a, const Mat& b);     // A * B
Mat matmul_nt(const Mat& a, const Mat& b);  // A * B^T
Mat matmul_tn(const Mat& a, const Mat& b);  // A^T * B
void add_product_nn(Mat& c, const Mat& a, const Mat& b);  // C += A * B
void add_product_nt(Mat& c, const Mat& a, const Mat& b);  // C += A * B^T
void add_product_tn(Mat& c, const Mat& a, const Mat& b);  // C += A^T * B

void add_inplace(Mat& a, const Mat& b);
void axpy_inplace(Mat& a, double s, const Mat& b);  // a += s * b
Mat transpose(const Mat& a);

}  // namespace smagdi::nn
