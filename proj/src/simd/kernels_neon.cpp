#include <arm_neon.h>

#include <cmath>

#include "kernels.hpp"

namespace eclaire::simd::detail {
namespace {

double dot_neon(const double* a, const double* b, std::size_t n) {
  float64x2_t acc0 = vdupq_n_f64(0.0);
  float64x2_t acc1 = vdupq_n_f64(0.0);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    acc0 = vfmaq_f64(acc0, vld1q_f64(a + i), vld1q_f64(b + i));
    acc1 = vfmaq_f64(acc1, vld1q_f64(a + i + 2), vld1q_f64(b + i + 2));
  }
  double sum = vaddvq_f64(vaddq_f64(acc0, acc1));
  for (; i < n; ++i) sum += a[i] * b[i];
  return sum;
}

void axpy_neon(double alpha, const double* x, double* y, std::size_t n) {
  const float64x2_t va = vdupq_n_f64(alpha);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void affine_neon(const double* w, const double* bias, const double* x, double* out,
                 std::size_t rows, std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) out[r] = bias[r] + dot_neon(w + r * cols, x, cols);
}

void adam_neon(double* param, const double* grad, double* m, double* v, std::size_t n,
               const AdamStep& step) {
  const float64x2_t b1 = vdupq_n_f64(step.beta1);
  const float64x2_t b2 = vdupq_n_f64(step.beta2);
  const float64x2_t c1 = vdupq_n_f64(1.0 - step.beta1);
  const float64x2_t c2 = vdupq_n_f64(1.0 - step.beta2);
  const float64x2_t lr = vdupq_n_f64(step.lr_t);
  const float64x2_t eps = vdupq_n_f64(step.epsilon);
  std::size_t i = 0;
  for (; i + 2 <= n; i += 2) {
    const float64x2_t g = vld1q_f64(grad + i);
    const float64x2_t mi = vaddq_f64(vmulq_f64(b1, vld1q_f64(m + i)), vmulq_f64(c1, g));
    const float64x2_t vi = vaddq_f64(vmulq_f64(b2, vld1q_f64(v + i)), vmulq_f64(vmulq_f64(c2, g), g));
    const float64x2_t delta = vdivq_f64(vmulq_f64(lr, mi), vaddq_f64(vsqrtq_f64(vi), eps));
    vst1q_f64(m + i, mi);
    vst1q_f64(v + i, vi);
    vst1q_f64(param + i, vsubq_f64(vld1q_f64(param + i), delta));
  }
  const double s1 = 1.0 - step.beta1;
  const double s2 = 1.0 - step.beta2;
  for (; i < n; ++i) {
    m[i] = step.beta1 * m[i] + s1 * grad[i];
    v[i] = step.beta2 * v[i] + s2 * grad[i] * grad[i];
    param[i] -= step.lr_t * m[i] / (std::sqrt(v[i]) + step.epsilon);
  }
}

}  // namespace

const KernelTable& neon_kernels() {
  static const KernelTable table{"neon", dot_neon, axpy_neon, affine_neon, adam_neon};
  return table;
}

}  // namespace eclaire::simd::detail
