#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "eclaire/matrix.hpp"

namespace eclaire::rules {

enum class Op : unsigned char { kGreater, kLessEqual };

// (x[feature] > threshold) or (x[feature] <= threshold).
struct Term {
  std::size_t feature = 0;
  Op op = Op::kGreater;
  double threshold = 0.0;

  bool holds(std::span<const double> x) const {
    const double v = x[feature];
    return op == Op::kGreater ? v > threshold : v <= threshold;
  }

  friend bool operator==(const Term&, const Term&) = default;
  friend auto operator<=>(const Term&, const Term&) = default;
};

Term negate(const Term& t);
std::string_view op_symbol(Op op);
Op op_from_symbol(std::string_view s);

// A conjunction of terms. Canonical form keeps at most one lower bound (>)
// and one upper bound (<=) per feature, sorted by (feature, op).
using Premise = std::vector<Term>;

bool eval_premise(std::span<const Term> premise, std::span<const double> x);

// Tightens bounds into canonical form. Returns nullopt when the conjunction
// is unsatisfiable (a feature's lower bound is not below its upper bound).
std::optional<Premise> canonical_premise(std::span<const Term> terms);

struct Rule {
  Premise premise;
  Label conclusion = 0;
  double confidence = 1.0;

  friend bool operator==(const Rule&, const Rule&) = default;
};

class RuleSet {
 public:
  RuleSet() = default;
  RuleSet(std::size_t num_classes, Label default_label, std::vector<std::string> feature_names = {},
          std::vector<Rule> rules = {});

  std::size_t num_classes() const noexcept { return num_classes_; }
  Label default_label() const noexcept { return default_label_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::vector<Rule>& rules() const noexcept { return rules_; }
  std::size_t size() const noexcept { return rules_.size(); }
  bool empty() const noexcept { return rules_.empty(); }

  void add(Rule rule);
  void set_feature_names(std::vector<std::string> names) { feature_names_ = std::move(names); }

  // Majority vote over fired rules, one vote per rule. Ties go to the larger
  // confidence sum, then the lower class. No fired rule -> default label.
  Label predict(std::span<const double> x) const;
  Labels predict(const Matrix& x) const;

  // Confidence-weighted class distribution of the fired rules; one-hot on the
  // default label when nothing fires.
  std::vector<double> score(std::span<const double> x) const;

  friend bool operator==(const RuleSet&, const RuleSet&) = default;

 private:
  std::size_t num_classes_ = 2;
  Label default_label_ = 0;
  std::vector<std::string> feature_names_;
  std::vector<Rule> rules_;
};

// Bound tightening, vacuous-rule removal, and merging of exact duplicates
// (premise and conclusion) keeping the highest confidence. Rule order follows
// first occurrence. Idempotent.
RuleSet canonicalize(const RuleSet& rs);

// Union followed by canonicalize. Throws ConfigError when class counts or
// default labels disagree.
RuleSet merge(const RuleSet& a, const RuleSet& b);

// Fraction of rules whose premise mentions each feature.
std::vector<double> feature_usage(const RuleSet& rs, std::size_t num_features);

// Removes floor(pct * |rules| / 100) lowest-confidence rules; among equal
// confidences the earlier rule goes first. Survivors keep their order.
RuleSet drop_low_confidence(const RuleSet& rs, double pct);

struct RuleStats {
  std::size_t rule_count;
  double avg_rule_length;
};

// An empty rule set counts as the single default rule of length 0.
RuleStats rule_stats(const RuleSet& rs);

inline constexpr int kRuleFileVersion = 1;

std::string to_json(const RuleSet& rs);
RuleSet from_json(std::string_view text);
void serialize(const RuleSet& rs, const std::filesystem::path& path);
RuleSet deserialize(const std::filesystem::path& path);

std::string to_string(const Rule& rule, std::span<const std::string> feature_names = {},
                      std::span<const std::string> class_names = {});

}  // namespace eclaire::rules
