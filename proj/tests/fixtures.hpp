#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "eclaire/matrix.hpp"
#include "eclaire/mlp.hpp"
#include "eclaire/rng.hpp"
#include "eclaire/rules.hpp"

namespace fixtures {

using eclaire::Label;
using eclaire::Labels;
using eclaire::Matrix;

// side x side grid of cell centres on [0,1]^2.
inline Matrix grid2d(std::size_t side) {
  Matrix x(side * side, 2);
  for (std::size_t i = 0; i < side; ++i)
    for (std::size_t j = 0; j < side; ++j) {
      x(i * side + j, 0) = (static_cast<double>(i) + 0.5) / static_cast<double>(side);
      x(i * side + j, 1) = (static_cast<double>(j) + 0.5) / static_cast<double>(side);
    }
  return x;
}

// 1 on `runs` equally spaced bands of [0,1], 0 between them.
inline double bands(double v, int runs) {
  const int cell = static_cast<int>(v * (2 * runs + 1));
  return cell % 2 == 1 ? 1.0 : 0.0;
}

// Hidden representation of grid2d: column 0 is TRUE on 3 bands of x1,
// column 1 on 4 bands of x2, column 2 is constant 1.
struct BandFixture {
  Matrix x;
  Matrix h;
};

inline BandFixture band_fixture(std::size_t side = 60) {
  BandFixture f{grid2d(side), Matrix(side * side, 3)};
  for (std::size_t r = 0; r < f.x.rows(); ++r) {
    f.h(r, 0) = bands(f.x(r, 0), 3);
    f.h(r, 1) = bands(f.x(r, 1), 4);
    f.h(r, 2) = 1.0;
  }
  return f;
}

inline eclaire::rules::Term gt(std::size_t f, double v) {
  return {f, eclaire::rules::Op::kGreater, v};
}
inline eclaire::rules::Term le(std::size_t f, double v) {
  return {f, eclaire::rules::Op::kLessEqual, v};
}

inline Labels truth_of(const eclaire::rules::Premise& p, const Matrix& h) {
  Labels out(h.rows());
  for (std::size_t r = 0; r < h.rows(); ++r) out[r] = eclaire::rules::eval_premise(p, h.row(r));
  return out;
}

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed,
                            double lo = 0.0, double hi = 1.0) {
  eclaire::Rng rng(seed);
  Matrix x(rows, cols);
  for (double& v : x.values()) v = rng.uniform(lo, hi);
  return x;
}

// Untrained network with Glorot weights and small random biases so hidden
// units are not all centred on zero.
inline eclaire::mlp::Mlp random_net(std::size_t in, std::vector<std::size_t> hidden,
                                    std::size_t classes, std::uint64_t seed,
                                    eclaire::mlp::Activation act = eclaire::mlp::Activation::kTanh) {
  auto net = eclaire::mlp::init_network(in, hidden, classes, act, seed);
  eclaire::Rng rng(eclaire::derive_seed(seed, 99));
  for (auto& layer : net.mutable_layers())
    for (double& b : layer.bias) b = rng.uniform(-0.5, 0.5);
  return net;
}

// Random canonical rule over `features` features with thresholds on a coarse
// lattice, so duplicates and overlaps are common.
inline eclaire::rules::Rule random_rule(eclaire::Rng& rng, std::size_t features,
                                        std::size_t classes, std::size_t max_terms) {
  eclaire::rules::Rule r;
  const std::size_t n = rng.below(max_terms + 1);
  for (std::size_t k = 0; k < n; ++k) {
    const double v = static_cast<double>(rng.below(9) + 1) / 10.0;
    r.premise.push_back(rng.below(2) ? gt(rng.below(features), v) : le(rng.below(features), v));
  }
  r.conclusion = static_cast<Label>(rng.below(classes));
  r.confidence = static_cast<double>(rng.below(100) + 1) / 100.0;
  return r;
}

}  // namespace fixtures
