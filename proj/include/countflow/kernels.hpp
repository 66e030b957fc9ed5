#pragma once

// Dense double-precision inner loops shared by the rate network and the
// sample-set metrics. Every kernel has a portable scalar reference and, on
// x86-64, an AVX2/FMA variant. The variant is chosen once at startup from the
// CPU features; COUNTFLOW_KERNELS=scalar|avx2 overrides the choice.

#include <cstddef>
#include <span>
#include <string_view>

namespace countflow::kernels {

enum class Isa { scalar, avx2 };

struct KernelTable {
  Isa isa;
  // sum_i x[i] * y[i]
  double (*dot)(const double* x, const double* y, std::size_t n);
  // y += a * x
  void (*axpy)(double a, const double* x, double* y, std::size_t n);
  // y = W x + b, W row-major rows x cols; b may be null
  void (*gemv)(const double* w, const double* x, const double* b, double* y, std::size_t rows,
               std::size_t cols);
  // x_grad += W^T g
  void (*gemv_t_acc)(const double* w, const double* g, double* x_grad, std::size_t rows,
                     std::size_t cols);
  // out[i * nb + j] = ||a_i - b_j||^2; a is na x d, b is nb x d, both row-major.
  // Bit-identical across variants (no fused multiply-add, fixed summation order).
  void (*squared_distances)(const double* a, std::size_t na, const double* b, std::size_t nb,
                            std::size_t d, double* out);
};

const KernelTable& scalar_table();
bool isa_available(Isa isa);
const KernelTable& table(Isa isa);
const KernelTable& active();
std::string_view isa_name(Isa isa);

inline double dot(std::span<const double> x, std::span<const double> y) {
  return active().dot(x.data(), y.data(), x.size());
}

inline void axpy(double a, std::span<const double> x, std::span<double> y) {
  active().axpy(a, x.data(), y.data(), x.size());
}

}  // namespace countflow::kernels
