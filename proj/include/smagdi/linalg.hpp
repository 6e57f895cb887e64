#pragma once

#include <vector>

#include "smagdi/mat.hpp"

namespace smagdi::nn {

struct EighResult {
  std::vector<double> eigenvalues;  // ascending
  Mat eigenvectors;                 // column i pairs with eigenvalues[i]
};

// Full eigen-decomposition of a symmetric matrix (cyclic Jacobi rotations).
// Intended for the small dense matrices debate graphs produce.
EighResult eigh_sym(const Mat& a);

}  // namespace smagdi::nn
