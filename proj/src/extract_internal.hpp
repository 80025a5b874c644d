#pragma once

#include <span>

#include "eclaire/extract.hpp"

namespace eclaire::extract::detail {

struct Prepared {
  Matrix x;
  Labels predicted;
};

// Network predictions on x, then the optional stratified subsample of rows
// (stratified on the predictions).
Prepared prepare(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg);

tree::TreeParams tree_params(const ExtractionConfig& cfg, std::span<const Label> targets,
                             std::size_t num_classes);

}  // namespace eclaire::extract::detail
