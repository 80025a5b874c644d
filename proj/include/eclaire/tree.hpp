#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eclaire/matrix.hpp"
#include "eclaire/rules.hpp"

namespace eclaire::tree {

struct TreeParams {
  // A node with fewer samples than this becomes a leaf.
  std::size_t min_samples_split = 2;
  // Per-class multipliers on sample counts; empty means all ones.
  std::vector<double> class_weights;
  // Drop features whose best root split has no positive corrected gain.
  bool winnow = true;
};

struct Node {
  bool is_leaf = true;
  // Split nodes: x[feature] <= threshold goes left, otherwise right.
  std::size_t feature = 0;
  double threshold = 0.0;
  std::size_t left = 0;
  std::size_t right = 0;
  // Leaves.
  Label label = 0;
  std::vector<std::size_t> histogram;
  double confidence = 1.0;
};

class DecisionTree {
 public:
  DecisionTree(std::vector<Node> nodes, std::size_t num_features, std::size_t num_classes)
      : nodes_(std::move(nodes)), num_features_(num_features), num_classes_(num_classes) {}

  const std::vector<Node>& nodes() const noexcept { return nodes_; }
  const Node& root() const { return nodes_.front(); }
  std::size_t num_features() const noexcept { return num_features_; }
  std::size_t num_classes() const noexcept { return num_classes_; }

  std::size_t leaf_count() const;
  std::size_t split_count() const { return nodes_.size() - leaf_count(); }
  // Edges on the longest root-to-leaf path.
  std::size_t depth() const;

  std::size_t leaf_index(std::span<const double> x) const;
  Label predict(std::span<const double> x) const { return nodes_[leaf_index(x)].label; }

 private:
  std::vector<Node> nodes_;
  std::size_t num_features_;
  std::size_t num_classes_;
};

// Per-feature sample orderings of a fixed input matrix. Building it once lets
// many trees over the same inputs (one per substituted clause) skip sorting.
class SortedColumns {
 public:
  explicit SortedColumns(const Matrix& x);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return columns_.size(); }
  const std::vector<double>& column(std::size_t f) const { return columns_[f]; }
  const std::vector<std::uint32_t>& order(std::size_t f) const { return orders_[f]; }

 private:
  std::size_t rows_;
  std::vector<std::vector<double>> columns_;
  std::vector<std::vector<std::uint32_t>> orders_;
};

// Laplace-corrected leaf purity (correct + 1) / (total + 2).
double leaf_confidence(std::size_t correct, std::size_t total);

// Top-down binary induction over continuous features.
//
// At every node each feature proposes its best threshold by information gain.
// Thresholds are midpoints between adjacent distinct values and are only tried
// at class boundaries. The gain is then penalized by log2(distinct - 1) / n,
// the cost of encoding which threshold was picked, and features are compared
// by gain ratio among those whose penalized gain is positive and at least the
// average. Ties go to the lower feature index, then the lower threshold.
DecisionTree induce(const Matrix& x, std::span<const Label> y, std::size_t num_classes,
                    const TreeParams& params);
DecisionTree induce(const SortedColumns& x, std::span<const Label> y, std::size_t num_classes,
                    const TreeParams& params);

// One rule per leaf, premise = root-to-leaf conditions with bounds tightened.
rules::RuleSet to_ruleset(const DecisionTree& tree, Label default_label,
                          std::vector<std::string> feature_names = {});

// Rules of the leaves predicting `label`, in leaf order.
std::vector<rules::Rule> rules_for_label(const DecisionTree& tree, Label label);

}  // namespace eclaire::tree
