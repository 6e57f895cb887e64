#include "smagdi/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "smagdi/error.hpp"

namespace smagdi::nn {
namespace {

double off_diagonal_norm(const Mat& a) {
  double s = 0.0;
  for (int i = 0; i < a.rows(); ++i) {
    for (int j = 0; j < a.cols(); ++j) {
      if (i != j) s += a(i, j) * a(i, j);
    }
  }
  return std::sqrt(s);
}

}  // namespace

EighResult eigh_sym(const Mat& input) {
  if (input.rows() != input.cols()) {
    throw ValidationError("eigh_sym requires a square matrix");
  }
  const int n = input.rows();
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (std::abs(input(i, j) - input(j, i)) > 1e-12) {
        throw ValidationError("eigh_sym requires a symmetric matrix");
      }
    }
  }

  Mat a = input;
  Mat v(n, n);
  for (int i = 0; i < n; ++i) v(i, i) = 1.0;

  double scale = 0.0;
  for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a(i, i)));
  scale = std::max(scale, off_diagonal_norm(a));
  const double tol = std::max(1e-300, 1e-14 * std::max(scale, 1.0));

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    if (off_diagonal_norm(a) <= tol) break;
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= tol / (n * n)) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (int i = 0; i < n; ++i) {
          const double aip = a(i, p);
          const double aiq = a(i, q);
          a(i, p) = c * aip - s * aiq;
          a(i, q) = s * aip + c * aiq;
        }
        for (int i = 0; i < n; ++i) {
          const double api = a(p, i);
          const double aqi = a(q, i);
          a(p, i) = c * api - s * aqi;
          a(q, i) = s * api + c * aqi;
        }
        for (int i = 0; i < n; ++i) {
          const double vip = v(i, p);
          const double viq = v(i, q);
          v(i, p) = c * vip - s * viq;
          v(i, q) = s * vip + c * viq;
        }
      }
    }
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return a(x, x) < a(y, y); });

  EighResult r;
  r.eigenvalues.resize(n);
  r.eigenvectors = Mat(n, n);
  for (int k = 0; k < n; ++k) {
    r.eigenvalues[k] = a(order[k], order[k]);
    for (int i = 0; i < n; ++i) r.eigenvectors(i, k) = v(i, order[k]);
  }
  return r;
}

}  // namespace smagdi::nn
