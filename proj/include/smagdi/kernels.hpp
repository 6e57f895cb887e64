#pragma once

#include <cstddef>

namespace smagdi::kernels {

// Numeric backends for the arithmetic inner loops. kScalar is the reference
// implementation; kAvx2 is picked at runtime on CPUs that support AVX2+FMA.
// Override with SMAGDI_KERNELS=scalar|avx2 or force_backend().
enum class Backend { kScalar, kAvx2 };

Backend active_backend();
const char* backend_name(Backend b);
bool avx2_supported();
void force_backend(Backend b);  // ValidationError when unavailable
void reset_backend();           // back to env/autodetect

// Reductions.
double dot(std::size_t n, const double* x, const double* y);
double sum(std::size_t n, const double* x);
double sum_squares(std::size_t n, const double* x);
double max_value(std::size_t n, const double* x);  // n >= 1

// Elementwise.
void axpy(std::size_t n, double a, const double* x, double* y);  // y += a*x
void scale_inplace(std::size_t n, double a, double* x);
void add(std::size_t n, const double* x, const double* y, double* out);
void sub(std::size_t n, const double* x, const double* y, double* out);
void mul(std::size_t n, const double* x, const double* y, double* out);
void relu(std::size_t n, const double* x, double* out);
// dx += dy wherever x > 0.
void relu_backward(std::size_t n, const double* x, const double* dy, double* dx);

// Row-major GEMM family. When accumulate is false, C is overwritten.
// C[m,n] (+)= A[m,k] * B[k,n]
void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate);
// C[m,n] (+)= A[m,k] * B[n,k]^T
void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate);
// C[m,n] (+)= A[k,m]^T * B[k,n]
void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate);

}  // namespace smagdi::kernels
