#include "countflow/kernels.hpp"

namespace countflow::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
  return acc;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void gemv_scalar(const double* w, const double* x, const double* b, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_scalar(w + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

void gemv_t_acc_scalar(const double* w, const double* g, double* x_grad, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy_scalar(g[r], w + r * cols, x_grad, cols);
}

void squared_distances_scalar(const double* a, std::size_t na, const double* b, std::size_t nb,
                              std::size_t d, double* out) {
  for (std::size_t i = 0; i < na; ++i) {
    const double* ai = a + i * d;
    for (std::size_t j = 0; j < nb; ++j) {
      const double* bj = b + j * d;
      double acc = 0.0;
      for (std::size_t k = 0; k < d; ++k) {
        const double diff = ai[k] - bj[k];
        acc = acc + diff * diff;
      }
      out[i * nb + j] = acc;
    }
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable t{Isa::scalar,      dot_scalar, axpy_scalar, gemv_scalar,
                             gemv_t_acc_scalar, squared_distances_scalar};
  return t;
}

}  // namespace countflow::kernels
