#include <cmath>

#include "eclaire/simd.hpp"

namespace eclaire::simd {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void affine_scalar(const double* w, const double* bias, const double* x, double* out,
                   std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = bias[r] + dot_scalar(w + r * cols, x, cols);
}

void adam_scalar(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamStep& step) {
  const double c1 = 1.0 - step.beta1;
  const double c2 = 1.0 - step.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = step.beta1 * m[i] + c1 * grad[i];
    v[i] = step.beta2 * v[i] + c2 * grad[i] * grad[i];
    param[i] -= step.lr_t * m[i] / (std::sqrt(v[i]) + step.epsilon);
  }
}

}  // namespace

const KernelTable& scalar_kernels() {
  static const KernelTable table{"scalar", dot_scalar, axpy_scalar, affine_scalar, adam_scalar};
  return table;
}

}  // namespace eclaire::simd
