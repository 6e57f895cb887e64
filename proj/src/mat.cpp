#include "smagdi/mat.hpp"

#include <cmath>
#include <string>

#include "smagdi/error.hpp"
#include "smagdi/kernels.hpp"

namespace smagdi::nn {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw ValidationError(what);
}

std::string shape_str(const Mat& m) {
  return "[" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + "]";
}

}  // namespace

Mat::Mat(int rows, int cols, double fill)
    : rows_(rows), cols_(cols), d_(static_cast<std::size_t>(rows) * cols, fill) {
  require(rows >= 0 && cols >= 0, "Mat dimensions must be non-negative");
}

Mat Mat::row(std::span<const double> values) {
  Mat m(1, static_cast<int>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) m.d_[i] = values[i];
  return m;
}

Mat Mat::column(std::span<const double> values) {
  Mat m(static_cast<int>(values.size()), 1);
  for (std::size_t i = 0; i < values.size(); ++i) m.d_[i] = values[i];
  return m;
}

Mat Mat::gaussian(int rows, int cols, SplitMix64& rng, double std_dev) {
  Mat m(rows, cols);
  for (auto& v : m.d_) v = rng.next_gaussian() * std_dev;
  return m;
}

void Mat::fill(double v) {
  for (auto& x : d_) x = v;
}

bool Mat::all_finite() const {
  for (double v : d_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

Mat matmul(const Mat& a, const Mat& b) {
  require(a.cols() == b.rows(), "matmul shape mismatch " + shape_str(a) + "*" + shape_str(b));
  Mat c(a.rows(), b.cols());
  kernels::gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data(), false);
  return c;
}

Mat matmul_nt(const Mat& a, const Mat& b) {
  require(a.cols() == b.cols(), "matmul_nt shape mismatch " + shape_str(a) + "*" + shape_str(b) + "^T");
  Mat c(a.rows(), b.rows());
  kernels::gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(), c.data(), false);
  return c;
}

Mat matmul_tn(const Mat& a, const Mat& b) {
  require(a.rows() == b.rows(), "matmul_tn shape mismatch " + shape_str(a) + "^T*" + shape_str(b));
  Mat c(a.cols(), b.cols());
  kernels::gemm_tn(a.cols(), b.cols(), a.rows(), a.data(), b.data(), c.data(), false);
  return c;
}

void add_product_nn(Mat& c, const Mat& a, const Mat& b) {
  require(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(),
          "add_product_nn shape mismatch");
  kernels::gemm_nn(a.rows(), b.cols(), a.cols(), a.data(), b.data(), c.data(), true);
}

void add_product_nt(Mat& c, const Mat& a, const Mat& b) {
  require(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(),
          "add_product_nt shape mismatch");
  kernels::gemm_nt(a.rows(), b.rows(), a.cols(), a.data(), b.data(), c.data(), true);
}

void add_product_tn(Mat& c, const Mat& a, const Mat& b) {
  require(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
          "add_product_tn shape mismatch");
  kernels::gemm_tn(a.cols(), b.cols(), a.rows(), a.data(), b.data(), c.data(), true);
}

void add_inplace(Mat& a, const Mat& b) {
  require(a.same_shape(b), "add_inplace shape mismatch");
  kernels::add(a.size(), a.data(), b.data(), a.data());
}

void axpy_inplace(Mat& a, double s, const Mat& b) {
  require(a.same_shape(b), "axpy_inplace shape mismatch");
  kernels::axpy(a.size(), s, b.data(), a.data());
}

Mat transpose(const Mat& a) {
  Mat t(a.cols(), a.rows());
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  }
  return t;
}

}  // namespace smagdi::nn
