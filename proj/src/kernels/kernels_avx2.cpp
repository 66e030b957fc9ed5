// Compiled with -mavx2 -mfma -ffp-contract=off. Fused multiply-adds appear
// only where written explicitly, so squared_distances stays bit-identical to
// the scalar reference.

#include <immintrin.h>

#include <vector>

#include "countflow/kernels.hpp"

namespace countflow::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
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
  double acc = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(a);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += a * x[i];
}

void gemv_avx2(const double* w, const double* x, const double* b, double* y, std::size_t rows,
               std::size_t cols) {
  std::size_t r = 0;
  // Four rows at a time share each load of x.
  for (; r + 4 <= rows; r += 4) {
    const double* w0 = w + r * cols;
    const double* w1 = w0 + cols;
    const double* w2 = w1 + cols;
    const double* w3 = w2 + cols;
    __m256d a0 = _mm256_setzero_pd(), a1 = _mm256_setzero_pd();
    __m256d a2 = _mm256_setzero_pd(), a3 = _mm256_setzero_pd();
    std::size_t c = 0;
    for (; c + 4 <= cols; c += 4) {
      const __m256d xv = _mm256_loadu_pd(x + c);
      a0 = _mm256_fmadd_pd(_mm256_loadu_pd(w0 + c), xv, a0);
      a1 = _mm256_fmadd_pd(_mm256_loadu_pd(w1 + c), xv, a1);
      a2 = _mm256_fmadd_pd(_mm256_loadu_pd(w2 + c), xv, a2);
      a3 = _mm256_fmadd_pd(_mm256_loadu_pd(w3 + c), xv, a3);
    }
    double s0 = hsum(a0), s1 = hsum(a1), s2 = hsum(a2), s3 = hsum(a3);
    for (; c < cols; ++c) {
      s0 += w0[c] * x[c];
      s1 += w1[c] * x[c];
      s2 += w2[c] * x[c];
      s3 += w3[c] * x[c];
    }
    y[r] = s0 + (b ? b[r] : 0.0);
    y[r + 1] = s1 + (b ? b[r + 1] : 0.0);
    y[r + 2] = s2 + (b ? b[r + 2] : 0.0);
    y[r + 3] = s3 + (b ? b[r + 3] : 0.0);
  }
  for (; r < rows; ++r) y[r] = dot_avx2(w + r * cols, x, cols) + (b ? b[r] : 0.0);
}

void gemv_t_acc_avx2(const double* w, const double* g, double* x_grad, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_avx2(g[r], w + r * cols, x_grad, cols);
}

void squared_distances_avx2(const double* a, std::size_t na, const double* b, std::size_t nb,
                            std::size_t d, double* out) {
  // Vectorise across target points: transpose b to one contiguous column per
  // coordinate, then process four b rows per lane group.
  std::vector<double> cols(nb * d);
  for (std::size_t j = 0; j < nb; ++j) {
    for (std::size_t k = 0; k < d; ++k) cols[k * nb + j] = b[j * d + k];
  }
  for (std::size_t i = 0; i < na; ++i) {
    const double* ai = a + i * d;
    double* row = out + i * nb;
    std::size_t j = 0;
    for (; j + 4 <= nb; j += 4) {
      __m256d acc = _mm256_setzero_pd();
      for (std::size_t k = 0; k < d; ++k) {
        const __m256d diff = _mm256_sub_pd(_mm256_set1_pd(ai[k]), _mm256_loadu_pd(&cols[k * nb + j]));
        acc = _mm256_add_pd(acc, _mm256_mul_pd(diff, diff));
      }
      _mm256_storeu_pd(row + j, acc);
    }
    for (; j < nb; ++j) {
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = ai[k] - cols[k * nb + j];
        acc = acc + diff * diff;
      }
      row[j] = acc;
    }
  }
}

}  // namespace

const KernelTable& avx2_table() {
  static const KernelTable t{Isa::avx2,      dot_avx2, axpy_avx2, gemv_avx2,
                             gemv_t_acc_avx2, squared_distances_avx2};
  return t;
}

}  // namespace countflow::kernels
