#pragma once

#include <cstddef>

namespace smagdi::kernels::detail {

struct Ops {
  double (*dot)(std::size_t, const double*, const double*);
  double (*sum)(std::size_t, const double*);
  double (*sum_squares)(std::size_t, const double*);
  double (*max_value)(std::size_t, const double*);
  void (*axpy)(std::size_t, double, const double*, double*);
  void (*scale_inplace)(std::size_t, double, double*);
  void (*add)(std::size_t, const double*, const double*, double*);
  void (*sub)(std::size_t, const double*, const double*, double*);
  void (*mul)(std::size_t, const double*, const double*, double*);
  void (*relu)(std::size_t, const double*, double*);
  void (*relu_backward)(std::size_t, const double*, const double*, double*);
  void (*gemm_nn)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
  void (*gemm_nt)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
  void (*gemm_tn)(std::size_t, std::size_t, std::size_t, const double*, const double*, double*, bool);
};

const Ops& scalar_ops();

// Null when the AVX2 translation unit was not built for this target.
const Ops* avx2_ops();

}  // namespace smagdi::kernels::detail
