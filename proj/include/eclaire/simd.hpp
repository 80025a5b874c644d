#pragma once

// Data-parallel kernels behind the dense layers and the optimizer.
//
// Every kernel has a portable scalar reference. Vectorized variants (AVX2+FMA
// on x86-64, NEON on AArch64) are compiled when the toolchain supports them
// and chosen at runtime from the CPU's capabilities. Setting the environment
// variable ECLAIRE_SIMD=scalar forces the reference path.
//
// Variants differ only in floating-point summation order, so results agree
// to within rounding; they are not bit-identical to each other. Within one
// process the selection is fixed, so every computation is reproducible.

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace eclaire::simd {

struct AdamStep {
  double lr_t;  // bias-corrected step size
  double beta1;
  double beta2;
  double epsilon;
};

struct KernelTable {
  std::string_view name;
  // sum_i a[i] * b[i]
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y[i] += alpha * x[i]
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);
  // out[r] = bias[r] + dot(w[r, :], x) for a row-major rows x cols matrix w
  void (*affine)(const double* w, const double* bias, const double* x, double* out,
                 std::size_t rows, std::size_t cols);
  // m = b1*m + (1-b1)*g; v = b2*v + (1-b2)*g^2; p -= lr_t * m / (sqrt(v) + eps)
  void (*adam)(double* param, const double* grad, double* m, double* v, std::size_t n,
               const AdamStep& step);
};

const KernelTable& scalar_kernels();

// Every variant compiled into this binary and supported by the running CPU,
// reference first.
std::vector<const KernelTable*> available_kernels();

// The variant used by the library. Resolved once on first call.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

inline void axpy(double alpha, std::span<const double> x, std::span<double> y) {
  active().axpy(alpha, x.data(), y.data(), x.size());
}

}  // namespace eclaire::simd
