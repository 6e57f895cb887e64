#include "smagdi/kernels.hpp"

#include <cstdlib>
#include <string>

#include "kernels_detail.hpp"
#include "smagdi/error.hpp"

namespace smagdi::kernels {
namespace {

bool cpu_has_avx2_fma() {
#if defined(__x86_64__) || defined(_M_X64)
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

Backend detect_backend() {
  if (const char* env = std::getenv("SMAGDI_KERNELS")) {
    const std::string v(env);
    if (v == "scalar") return Backend::kScalar;
    if (v == "avx2" && avx2_supported()) return Backend::kAvx2;
    // Unknown or unavailable request falls through to autodetect.
  }
  return avx2_supported() ? Backend::kAvx2 : Backend::kScalar;
}

struct State {
  Backend backend;
  const detail::Ops* ops;
};

State make_state(Backend b) {
  if (b == Backend::kAvx2) return {b, detail::avx2_ops()};
  return {b, &detail::scalar_ops()};
}

State& state() {
  static State s = make_state(detect_backend());
  return s;
}

const detail::Ops& ops() { return *state().ops; }

}  // namespace

bool avx2_supported() { return detail::avx2_ops() != nullptr && cpu_has_avx2_fma(); }

Backend active_backend() { return state().backend; }

const char* backend_name(Backend b) {
  return b == Backend::kAvx2 ? "avx2" : "scalar";
}

void force_backend(Backend b) {
  if (b == Backend::kAvx2 && !avx2_supported()) {
    throw ValidationError("avx2 kernels are not available on this host");
  }
  state() = make_state(b);
}

void reset_backend() { state() = make_state(detect_backend()); }

double dot(std::size_t n, const double* x, const double* y) { return ops().dot(n, x, y); }
double sum(std::size_t n, const double* x) { return ops().sum(n, x); }
double sum_squares(std::size_t n, const double* x) { return ops().sum_squares(n, x); }
double max_value(std::size_t n, const double* x) { return ops().max_value(n, x); }

void axpy(std::size_t n, double a, const double* x, double* y) { ops().axpy(n, a, x, y); }
void scale_inplace(std::size_t n, double a, double* x) { ops().scale_inplace(n, a, x); }
void add(std::size_t n, const double* x, const double* y, double* out) { ops().add(n, x, y, out); }
void sub(std::size_t n, const double* x, const double* y, double* out) { ops().sub(n, x, y, out); }
void mul(std::size_t n, const double* x, const double* y, double* out) { ops().mul(n, x, y, out); }
void relu(std::size_t n, const double* x, double* out) { ops().relu(n, x, out); }
void relu_backward(std::size_t n, const double* x, const double* dy, double* dx) {
  ops().relu_backward(n, x, dy, dx);
}

void gemm_nn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
  ops().gemm_nn(m, n, k, a, b, c, accumulate);
}
void gemm_nt(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
  ops().gemm_nt(m, n, k, a, b, c, accumulate);
}
void gemm_tn(std::size_t m, std::size_t n, std::size_t k,
             const double* a, const double* b, double* c, bool accumulate) {
  ops().gemm_tn(m, n, k, a, b, c, accumulate);
}

}  // namespace smagdi::kernels
