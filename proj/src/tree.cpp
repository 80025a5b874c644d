#include "eclaire/tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "eclaire/error.hpp"

namespace eclaire::tree {
namespace {

constexpr double kGainEpsilon = 1e-10;

double entropy(std::span<const double> hist, double total) {
  if (total <= 0.0) return 0.0;
  double h = 0.0;
  for (double c : hist) {
    if (c > 0.0) {
      const double p = c / total;
      h -= p * std::log2(p);
    }
  }
  return h;
}

struct Candidate {
  bool valid = false;
  std::size_t feature = 0;
  double threshold = 0.0;
  double gain = 0.0;  // penalized
  double ratio = 0.0;
};

class Builder {
 public:
  Builder(const SortedColumns& cols, std::span<const Label> y, std::size_t num_classes,
          const TreeParams& params)
      : cols_(cols), y_(y), num_classes_(num_classes), params_(params) {
    weight_.assign(num_classes, 1.0);
    if (!params.class_weights.empty()) {
      if (params.class_weights.size() != num_classes)
        throw ConfigError("class weight count does not match class count");
      weight_ = params.class_weights;
    }
    orders_.reserve(cols.cols());
    for (std::size_t f = 0; f < cols.cols(); ++f) orders_.push_back(cols.order(f));
    go_left_.assign(cols.rows(), 0);
    scratch_.resize(cols.rows());
    hist_.resize(num_classes);
    left_.resize(num_classes);
    right_.resize(num_classes);
  }

  DecisionTree build() {
    const std::size_t n = cols_.rows();
    active_.resize(cols_.cols());
    std::iota(active_.begin(), active_.end(), std::size_t{0});
    if (params_.winnow) {
      std::vector<std::size_t> kept;
      for (std::size_t f : active_) {
        Candidate c = best_for_feature(f, 0, n);
        if (c.valid && c.gain > kGainEpsilon) kept.push_back(f);
      }
      active_ = std::move(kept);
    }

    struct Work {
      std::size_t node, begin, end;
    };
    std::vector<Work> stack{{0, 0, n}};
    nodes_.emplace_back();
    while (!stack.empty()) {
      Work w = stack.back();
      stack.pop_back();
      Candidate split = choose_split(w.begin, w.end);
      if (!split.valid) {
        make_leaf(w.node, w.begin, w.end);
        continue;
      }
      const std::size_t mid = partition(split, w.begin, w.end);
      const std::size_t left = nodes_.size();
      nodes_.emplace_back();
      nodes_.emplace_back();
      Node& node = nodes_[w.node];
      node.is_leaf = false;
      node.feature = split.feature;
      node.threshold = split.threshold;
      node.left = left;
      node.right = left + 1;
      // Right pushed first so the left subtree is expanded first.
      stack.push_back({left + 1, mid, w.end});
      stack.push_back({left, w.begin, mid});
    }
    return DecisionTree(std::move(nodes_), cols_.cols(), num_classes_);
  }

 private:
  // Weighted class histogram of a node's samples (any feature order will do).
  void node_histogram(std::size_t begin, std::size_t end, std::vector<double>& hist,
                      std::vector<std::size_t>* counts = nullptr) const {
    std::fill(hist.begin(), hist.end(), 0.0);
    if (counts) counts->assign(num_classes_, 0);
    const auto& ord = orders_[active_.empty() ? 0 : active_.front()];
    for (std::size_t i = begin; i < end; ++i) {
      const auto c = static_cast<std::size_t>(y_[ord[i]]);
      hist[c] += weight_[c];
      if (counts) ++(*counts)[c];
    }
  }

  Candidate choose_split(std::size_t begin, std::size_t end) {
    const std::size_t n = end - begin;
    if (n < params_.min_samples_split || active_.empty()) return {};
    std::vector<std::size_t> counts;
    node_histogram(begin, end, hist_, &counts);
    const auto present = std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; });
    if (present <= 1) return {};

    std::vector<Candidate> cands;
    for (std::size_t f : active_) {
      Candidate c = best_for_feature(f, begin, end);
      if (c.valid && c.gain > kGainEpsilon) cands.push_back(c);
    }
    if (cands.empty()) return {};
    double avg = 0.0;
    for (const auto& c : cands) avg += c.gain;
    avg /= static_cast<double>(cands.size());
    Candidate best;
    for (const auto& c : cands) {
      if (c.gain + 1e-12 < avg) continue;
      if (!best.valid || c.ratio > best.ratio) best = c;
    }
    return best;
  }

  Candidate best_for_feature(std::size_t f, std::size_t begin, std::size_t end) {
    const auto& ord = orders_[f];
    const auto& col = cols_.column(f);
    const std::size_t n = end - begin;
    if (n < 2) return {};

    // Group equal values; remember each group's single class or -1 if mixed.
    groups_.clear();
    for (std::size_t i = begin; i < end; ++i) {
      const double v = col[ord[i]];
      const Label c = y_[ord[i]];
      if (groups_.empty() || v != groups_.back().value) {
        groups_.push_back({v, i, c});
      } else if (groups_.back().pure != c) {
        groups_.back().pure = -1;
      }
    }
    const std::size_t distinct = groups_.size();
    if (distinct < 2) return {};

    node_histogram(begin, end, hist_);
    const double total = std::accumulate(hist_.begin(), hist_.end(), 0.0);
    const double parent_h = entropy(hist_, total);

    std::fill(left_.begin(), left_.end(), 0.0);
    double left_w = 0.0;
    std::size_t pos = begin;
    double best_gain = -1.0;
    double best_threshold = 0.0;
    double best_left_w = 0.0;
    for (std::size_t g = 0; g + 1 < distinct; ++g) {
      const std::size_t stop = groups_[g + 1].start;
      for (; pos < stop; ++pos) {
        const auto c = static_cast<std::size_t>(y_[ord[pos]]);
        left_[c] += weight_[c];
        left_w += weight_[c];
      }
      if (groups_[g].pure >= 0 && groups_[g].pure == groups_[g + 1].pure) continue;
      for (std::size_t c = 0; c < num_classes_; ++c) right_[c] = hist_[c] - left_[c];
      const double right_w = total - left_w;
      const double gain = parent_h - (left_w / total) * entropy(left_, left_w) -
                          (right_w / total) * entropy(right_, right_w);
      if (gain > best_gain) {
        best_gain = gain;
        const double lo = groups_[g].value;
        const double hi = groups_[g + 1].value;
        double t = lo + (hi - lo) / 2.0;
        if (!(t >= lo && t < hi)) t = lo;
        best_threshold = t;
        best_left_w = left_w;
      }
    }
    if (best_gain < 0.0) return {};

    Candidate out;
    out.valid = true;
    out.feature = f;
    out.threshold = best_threshold;
    out.gain = best_gain - std::log2(static_cast<double>(distinct - 1)) / static_cast<double>(n);
    const double pl = best_left_w / total;
    const double pr = 1.0 - pl;
    double split_info = 0.0;
    if (pl > 0.0) split_info -= pl * std::log2(pl);
    if (pr > 0.0) split_info -= pr * std::log2(pr);
    out.ratio = split_info > 0.0 ? out.gain / split_info : 0.0;
    return out;
  }

  std::size_t partition(const Candidate& split, std::size_t begin, std::size_t end) {
    const auto& col = cols_.column(split.feature);
    const auto& split_order = orders_[split.feature];
    std::size_t n_left = 0;
    for (std::size_t i = begin; i < end; ++i) {
      const std::uint32_t s = split_order[i];
      go_left_[s] = col[s] <= split.threshold;
      n_left += go_left_[s];
    }
    for (std::size_t f : active_) {
      auto& ord = orders_[f];
      std::size_t l = begin;
      std::size_t r = 0;
      for (std::size_t i = begin; i < end; ++i) {
        const std::uint32_t s = ord[i];
        if (go_left_[s])
          ord[l++] = s;
        else
          scratch_[r++] = s;
      }
      std::copy_n(scratch_.begin(), r, ord.begin() + static_cast<std::ptrdiff_t>(l));
    }
    return begin + n_left;
  }

  void make_leaf(std::size_t node_id, std::size_t begin, std::size_t end) {
    std::vector<std::size_t> counts;
    node_histogram(begin, end, hist_, &counts);
    Node& node = nodes_[node_id];
    node.is_leaf = true;
    node.label = static_cast<Label>(std::max_element(hist_.begin(), hist_.end()) - hist_.begin());
    node.confidence = leaf_confidence(counts[static_cast<std::size_t>(node.label)], end - begin);
    node.histogram = std::move(counts);
  }

  struct Group {
    double value;
    std::size_t start;
    Label pure;
  };

  const SortedColumns& cols_;
  std::span<const Label> y_;
  std::size_t num_classes_;
  const TreeParams& params_;
  std::vector<double> weight_;
  std::vector<std::vector<std::uint32_t>> orders_;
  std::vector<std::size_t> active_;
  std::vector<char> go_left_;
  std::vector<std::uint32_t> scratch_;
  std::vector<double> hist_, left_, right_;
  std::vector<Group> groups_;
  std::vector<Node> nodes_;
};

void collect_rules(const DecisionTree& tree, std::size_t node_id, rules::Premise& path,
                   std::vector<rules::Rule>& out, const Label* only) {
  const Node& node = tree.nodes()[node_id];
  if (node.is_leaf) {
    if (only && node.label != *only) return;
    auto premise = rules::canonical_premise(path);
    out.push_back({premise ? std::move(*premise) : path, node.label, node.confidence});
    return;
  }
  path.push_back({node.feature, rules::Op::kLessEqual, node.threshold});
  collect_rules(tree, node.left, path, out, only);
  path.back().op = rules::Op::kGreater;
  collect_rules(tree, node.right, path, out, only);
  path.pop_back();
}

}  // namespace

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.is_leaf; }));
}

std::size_t DecisionTree::depth() const {
  std::vector<std::size_t> d(nodes_.size(), 0);
  std::size_t best = 0;
  // Children always have larger indices than their parent.
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    best = std::max(best, d[i]);
    if (!nodes_[i].is_leaf) {
      d[nodes_[i].left] = d[i] + 1;
      d[nodes_[i].right] = d[i] + 1;
    }
  }
  return best;
}

std::size_t DecisionTree::leaf_index(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes_[i].is_leaf) {
    const Node& n = nodes_[i];
    i = x[n.feature] <= n.threshold ? n.left : n.right;
  }
  return i;
}

SortedColumns::SortedColumns(const Matrix& x) : rows_(x.rows()) {
  if (x.rows() > UINT32_MAX) throw DataError("too many samples for tree induction");
  columns_.resize(x.cols());
  orders_.resize(x.cols());
  for (std::size_t f = 0; f < x.cols(); ++f) {
    auto& col = columns_[f];
    col.resize(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r) col[r] = x(r, f);
    auto& ord = orders_[f];
    ord.resize(x.rows());
    std::iota(ord.begin(), ord.end(), std::uint32_t{0});
    std::sort(ord.begin(), ord.end(), [&col](std::uint32_t a, std::uint32_t b) {
      return col[a] < col[b] || (col[a] == col[b] && a < b);
    });
  }
}

double leaf_confidence(std::size_t correct, std::size_t total) {
  return (static_cast<double>(correct) + 1.0) / (static_cast<double>(total) + 2.0);
}

DecisionTree induce(const SortedColumns& x, std::span<const Label> y, std::size_t num_classes,
                    const TreeParams& params) {
  if (params.min_samples_split < 2) throw ConfigError("min samples per split must be >= 2");
  if (x.rows() == 0) throw DataError("cannot induce a tree from no samples");
  if (x.cols() == 0) throw DataError("cannot induce a tree without features");
  if (y.size() != x.rows()) throw DataError("label count does not match sample count");
  if (num_classes < 1) throw ConfigError("need at least one class");
  for (Label l : y)
    if (l < 0 || static_cast<std::size_t>(l) >= num_classes)
      throw DataError("label out of range for tree induction");
  return Builder(x, y, num_classes, params).build();
}

DecisionTree induce(const Matrix& x, std::span<const Label> y, std::size_t num_classes,
                    const TreeParams& params) {
  if (params.min_samples_split < 2) throw ConfigError("min samples per split must be >= 2");
  if (x.rows() == 0) throw DataError("cannot induce a tree from no samples");
  return induce(SortedColumns(x), y, num_classes, params);
}

rules::RuleSet to_ruleset(const DecisionTree& tree, Label default_label,
                          std::vector<std::string> feature_names) {
  std::vector<rules::Rule> out;
  rules::Premise path;
  collect_rules(tree, 0, path, out, nullptr);
  return rules::RuleSet(std::max<std::size_t>(tree.num_classes(), 2), default_label,
                        std::move(feature_names), std::move(out));
}

std::vector<rules::Rule> rules_for_label(const DecisionTree& tree, Label label) {
  std::vector<rules::Rule> out;
  rules::Premise path;
  collect_rules(tree, 0, path, out, &label);
  return out;
}

}  // namespace eclaire::tree
