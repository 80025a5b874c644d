#include <cmath>
#include <vector>

#include "doctest.h"
#include "eclaire/rng.hpp"
#include "eclaire/simd.hpp"

using namespace eclaire;

namespace {

std::vector<double> random_vector(std::size_t n, Rng& rng) {
  std::vector<double> v(n);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  return v;
}

// Variants reorder sums, so compare relative to the magnitude of the terms.
void check_close(double a, double b, double scale) {
  CHECK(std::abs(a - b) <= 1e-12 * std::max(1.0, scale));
}

}  // namespace

TEST_CASE("scalar kernels match definitions") {
  const auto& k = simd::scalar_kernels();
  const std::vector<double> a{1, 2, 3}, b{4, 5, 6};
  CHECK(k.dot(a.data(), b.data(), 3) == 32.0);
  std::vector<double> y{1, 1, 1};
  k.axpy(2.0, a.data(), y.data(), 3);
  CHECK(y == std::vector<double>{3, 5, 7});
  const std::vector<double> w{1, 0, -1, 2, 2, 2};
  const std::vector<double> bias{0.5, -1};
  std::vector<double> out(2);
  k.affine(w.data(), bias.data(), a.data(), out.data(), 2, 3);
  CHECK(out == std::vector<double>{-1.5, 11});
}

TEST_CASE("the reference variant is always available and listed first") {
  const auto variants = simd::available_kernels();
  REQUIRE(!variants.empty());
  CHECK(variants.front() == &simd::scalar_kernels());
}

TEST_CASE("every variant agrees with the scalar reference") {
  const auto& ref = simd::scalar_kernels();
  Rng rng(11);
  for (const auto* k : simd::available_kernels()) {
    CAPTURE(k->name);
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 8u, 15u, 16u, 33u, 64u, 100u, 257u}) {
      CAPTURE(n);
      const auto a = random_vector(n, rng);
      const auto b = random_vector(n, rng);
      check_close(k->dot(a.data(), b.data(), n), ref.dot(a.data(), b.data(), n),
                  static_cast<double>(n));

      auto y1 = b, y2 = b;
      k->axpy(0.37, a.data(), y1.data(), n);
      ref.axpy(0.37, a.data(), y2.data(), n);
      for (std::size_t i = 0; i < n; ++i) check_close(y1[i], y2[i], 1.0);

      const std::size_t rows = n % 5 + 1;
      const auto w = random_vector(rows * n, rng);
      const auto bias = random_vector(rows, rng);
      std::vector<double> o1(rows), o2(rows);
      k->affine(w.data(), bias.data(), a.data(), o1.data(), rows, n);
      ref.affine(w.data(), bias.data(), a.data(), o2.data(), rows, n);
      for (std::size_t r = 0; r < rows; ++r) check_close(o1[r], o2[r], static_cast<double>(n));

      auto p1 = a, p2 = a;
      auto m1 = random_vector(n, rng), v1 = random_vector(n, rng);
      for (double& v : v1) v = std::abs(v);
      auto m2 = m1, v2 = v1;
      const simd::AdamStep step{1e-3, 0.9, 0.999, 1e-7};
      k->adam(p1.data(), b.data(), m1.data(), v1.data(), n, step);
      ref.adam(p2.data(), b.data(), m2.data(), v2.data(), n, step);
      for (std::size_t i = 0; i < n; ++i) {
        check_close(p1[i], p2[i], 1.0);
        check_close(m1[i], m2[i], 1.0);
        check_close(v1[i], v2[i], 1.0);
      }
    }
  }
}

TEST_CASE("active variant is one of the available ones") {
  bool found = false;
  for (const auto* k : simd::available_kernels()) found |= k == &simd::active();
  CHECK(found);
}
