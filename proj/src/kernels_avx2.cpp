// AVX2+FMA variants of the reference kernels. This translation unit is the
// only one compiled with -mavx2 -mfma; callers reach it through the runtime
// dispatch table, never directly.

#include "kernels_detail.hpp"

#if defined(SMAGDI_AVX2_BUILT)

#include <immintrin.h>

namespace smagdi::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  __m128d lo = _mm256_castpd256_pd128(v);
  __m128d hi = _mm256_extractf128_pd(v, 1);
  lo = _mm_add_pd(lo, hi);
  __m128d shuf = _mm_unpackhi_pd(lo, lo);
  return _mm_cvtsd_f64(_mm_add_sd(lo, shuf));
}

double v_dot(std::size_t n, const double* x, const double* y) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += x[i] * y[i];
  return s;
}

double v_sum(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) acc = _mm256_add_pd(acc, _mm256_loadu_pd(x + i));
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i];
  return s;
}

double v_sum_squares(std::size_t n, const double* x) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d v = _mm256_loadu_pd(x + i);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double s = hsum(acc);
  for (; i < n; ++i) s += x[i] * x[i];
  return s;
}

double v_max_value(std::size_t n, const double* x) {
  std::size_t i = 0;
  double best = x[0];
  if (n >= 4) {
    __m256d acc = _mm256_loadu_pd(x);
    for (i = 4; i + 4 <= n; i += 4) acc = _mm256_max_pd(acc, _mm256_loadu_pd(x + i));
    double lanes[4];
    _mm256_storeu_pd(lanes, acc);
    best = lanes[0];
    for (int l = 1; l < 4; ++l) {
      if (lanes[l] > best) best = lanes[l];
    }
  } else {
    i = 1;
  }
  for (; i < n; ++i) {
    if (x[i] > best) best = x[i];
  }
  return best;
}

void v_axpy(std::size_t n, double a, const double* x, double* y) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(av, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void v_scale_inplace(std::size_t n, double a, double* x) {
  const __m256d av = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(x + i, _mm256_mul_pd(av, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) x[i] *= a;
}

void v_add(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_add_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] + y[i];
}

void v_sub(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] - y[i];
}

void v_mul(std::size_t n, const double* x, const double* y, double* out) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_mul_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) out[i] = x[i] * y[i];
}

void v_relu(std::size_t n, const double* x, double* out) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(out + i, _mm256_max_pd(zero, _mm256_loadu_pd(x + i)));
  }
  for (; i < n; ++i) out[i] = x[i] > 0.0 ? x[i] : 0.0;
}

void v_relu_backward(std::size_t n, const double* x, const double* dy, double* dx) {
  const __m256d zero = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d xv = _mm256_loadu_pd(x + i);
    const __m256d mask = _mm256_cmp_pd(xv, zero, _CMP_GT_OQ);
    const __m256d gated = _mm256_and_pd(mask, _mm256_loadu_pd(dy + i));
    _mm256_storeu_pd(dx + i, _mm256_add_pd(_mm256_loadu_pd(dx + i), gated));
  }
  for (; i < n; ++i) {
    if (x[i] > 0.0) dx[i] += dy[i];
  }
}

void v_gemm_nn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    double* crow = c + i * n;
    if (!accumulate) {
      for (std::size_t j = 0; j < n; ++j) crow[j] = 0.0;
    }
    for (std::size_t l = 0; l < k; ++l) {
      const __m256d av = _mm256_set1_pd(a[i * k + l]);
      const double* brow = b + l * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(crow + j,
                         _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
      }
      const double as = a[i * k + l];
      for (; j < n; ++j) crow[j] += as * brow[j];
    }
  }
}

void v_gemm_nt(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c, bool accumulate) {
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    std::size_t j = 0;
    // Four output columns share each load of the A row.
    for (; j + 4 <= n; j += 4) {
      const double* b0 = b + (j + 0) * k;
      const double* b1 = b + (j + 1) * k;
      const double* b2 = b + (j + 2) * k;
      const double* b3 = b + (j + 3) * k;
      __m256d acc0 = _mm256_setzero_pd();
      __m256d acc1 = _mm256_setzero_pd();
      __m256d acc2 = _mm256_setzero_pd();
      __m256d acc3 = _mm256_setzero_pd();
      std::size_t l = 0;
      for (; l + 4 <= k; l += 4) {
        const __m256d av = _mm256_loadu_pd(arow + l);
        acc0 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b0 + l), acc0);
        acc1 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b1 + l), acc1);
        acc2 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b2 + l), acc2);
        acc3 = _mm256_fmadd_pd(av, _mm256_loadu_pd(b3 + l), acc3);
      }
      // Lane-wise reduction of the four accumulators into one vector.
      const __m256d h01 = _mm256_hadd_pd(acc0, acc1);  // [a0 b0 a1 b1] pairs
      const __m256d h23 = _mm256_hadd_pd(acc2, acc3);
      const __m256d lo = _mm256_permute2f128_pd(h01, h23, 0x20);
      const __m256d hi = _mm256_permute2f128_pd(h01, h23, 0x31);
      __m256d sums = _mm256_add_pd(lo, hi);  // [dot0 dot1 dot2 dot3]
      if (l < k) {
        double tails[4] = {0.0, 0.0, 0.0, 0.0};
        for (; l < k; ++l) {
          tails[0] += arow[l] * b0[l];
          tails[1] += arow[l] * b1[l];
          tails[2] += arow[l] * b2[l];
          tails[3] += arow[l] * b3[l];
        }
        sums = _mm256_add_pd(sums, _mm256_loadu_pd(tails));
      }
      double* cptr = c + i * n + j;
      if (accumulate) {
        _mm256_storeu_pd(cptr, _mm256_add_pd(_mm256_loadu_pd(cptr), sums));
      } else {
        _mm256_storeu_pd(cptr, sums);
      }
    }
    for (; j < n; ++j) {
      const double d = v_dot(k, arow, b + j * k);
      c[i * n + j] = accumulate ? c[i * n + j] + d : d;
    }
  }
}

void v_gemm_tn(std::size_t m, std::size_t n, std::size_t k,
               const double* a, const double* b, double* c, bool accumulate) {
  if (!accumulate) {
    for (std::size_t i = 0; i < m * n; ++i) c[i] = 0.0;
  }
  for (std::size_t l = 0; l < k; ++l) {
    const double* arow = a + l * m;
    const double* brow = b + l * n;
    for (std::size_t i = 0; i < m; ++i) {
      const __m256d av = _mm256_set1_pd(arow[i]);
      double* crow = c + i * n;
      std::size_t j = 0;
      for (; j + 4 <= n; j += 4) {
        _mm256_storeu_pd(crow + j,
                         _mm256_fmadd_pd(av, _mm256_loadu_pd(brow + j), _mm256_loadu_pd(crow + j)));
      }
      const double as = arow[i];
      for (; j < n; ++j) crow[j] += as * brow[j];
    }
  }
}

}  // namespace

const Ops* avx2_ops() {
  static const Ops ops{
      v_dot,  v_sum,  v_sum_squares, v_max_value, v_axpy,
      v_scale_inplace, v_add, v_sub, v_mul, v_relu, v_relu_backward,
      v_gemm_nn, v_gemm_nt, v_gemm_tn,
  };
  return &ops;
}

}  // namespace smagdi::kernels::detail

#else  // !SMAGDI_AVX2_BUILT

namespace smagdi::kernels::detail {

const Ops* avx2_ops() { return nullptr; }

}  // namespace smagdi::kernels::detail

#endif
