#include "eclaire/rules.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "eclaire/error.hpp"

namespace eclaire::rules {
namespace {

struct RuleKeyHash {
  std::size_t operator()(const Rule* r) const noexcept {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](std::uint64_t v) {
      h ^= v;
      h *= 1099511628211ULL;
    };
    mix(static_cast<std::uint64_t>(r->conclusion));
    for (const Term& t : r->premise) {
      mix(t.feature);
      mix(static_cast<std::uint64_t>(t.op));
      mix(std::bit_cast<std::uint64_t>(t.threshold));
    }
    return static_cast<std::size_t>(h);
  }
};

struct RuleKeyEq {
  bool operator()(const Rule* a, const Rule* b) const noexcept {
    return a->conclusion == b->conclusion && a->premise == b->premise;
  }
};

}  // namespace

Term negate(const Term& t) {
  return {t.feature, t.op == Op::kGreater ? Op::kLessEqual : Op::kGreater, t.threshold};
}

std::string_view op_symbol(Op op) { return op == Op::kGreater ? ">" : "<="; }

Op op_from_symbol(std::string_view s) {
  if (s == ">") return Op::kGreater;
  if (s == "<=") return Op::kLessEqual;
  throw DataError("unknown term operator '" + std::string(s) + "'");
}

bool eval_premise(std::span<const Term> premise, std::span<const double> x) {
  return std::all_of(premise.begin(), premise.end(), [&](const Term& t) { return t.holds(x); });
}

std::optional<Premise> canonical_premise(std::span<const Term> terms) {
  Premise sorted(terms.begin(), terms.end());
  std::sort(sorted.begin(), sorted.end());
  Premise out;
  out.reserve(sorted.size());
  for (const Term& t : sorted) {
    if (!out.empty() && out.back().feature == t.feature && out.back().op == t.op) {
      // Sorted ascending by threshold within (feature, op): the tightest lower
      // bound is the largest, the tightest upper bound the smallest.
      if (t.op == Op::kGreater) out.back().threshold = t.threshold;
      continue;
    }
    out.push_back(t);
  }
  for (std::size_t i = 0; i + 1 < out.size(); ++i) {
    const Term& lo = out[i];
    const Term& hi = out[i + 1];
    if (lo.feature == hi.feature && lo.op == Op::kGreater && hi.op == Op::kLessEqual &&
        !(lo.threshold < hi.threshold))
      return std::nullopt;
  }
  return out;
}

RuleSet::RuleSet(std::size_t num_classes, Label default_label,
                 std::vector<std::string> feature_names, std::vector<Rule> rules)
    : num_classes_(num_classes),
      default_label_(default_label),
      feature_names_(std::move(feature_names)) {
  if (num_classes_ < 2) throw ConfigError("rule set needs at least two classes");
  if (default_label_ < 0 || static_cast<std::size_t>(default_label_) >= num_classes_)
    throw ConfigError("default label out of range");
  rules_.reserve(rules.size());
  for (auto& r : rules) add(std::move(r));
}

void RuleSet::add(Rule rule) {
  if (rule.conclusion < 0 || static_cast<std::size_t>(rule.conclusion) >= num_classes_)
    throw ConfigError("rule conclusion out of range");
  if (!(rule.confidence > 0.0 && rule.confidence <= 1.0))
    throw ConfigError("rule confidence must lie in (0, 1]");
  for (const Term& t : rule.premise)
    if (!std::isfinite(t.threshold)) throw ConfigError("term threshold must be finite");
  rules_.push_back(std::move(rule));
}

Label RuleSet::predict(std::span<const double> x) const {
  std::vector<std::size_t> votes(num_classes_, 0);
  std::vector<double> conf(num_classes_, 0.0);
  bool fired = false;
  for (const Rule& r : rules_) {
    if (!eval_premise(r.premise, x)) continue;
    fired = true;
    ++votes[static_cast<std::size_t>(r.conclusion)];
    conf[static_cast<std::size_t>(r.conclusion)] += r.confidence;
  }
  if (!fired) return default_label_;
  std::size_t best = 0;
  for (std::size_t c = 1; c < num_classes_; ++c) {
    if (votes[c] > votes[best] || (votes[c] == votes[best] && conf[c] > conf[best])) best = c;
  }
  return static_cast<Label>(best);
}

Labels RuleSet::predict(const Matrix& x) const {
  Labels out(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r) out[r] = predict(x.row(r));
  return out;
}

std::vector<double> RuleSet::score(std::span<const double> x) const {
  std::vector<double> s(num_classes_, 0.0);
  double total = 0.0;
  for (const Rule& r : rules_) {
    if (!eval_premise(r.premise, x)) continue;
    s[static_cast<std::size_t>(r.conclusion)] += r.confidence;
    total += r.confidence;
  }
  if (total == 0.0) {
    s[static_cast<std::size_t>(default_label_)] = 1.0;
    return s;
  }
  for (double& v : s) v /= total;
  return s;
}

RuleSet canonicalize(const RuleSet& rs) {
  std::vector<Rule> kept;
  kept.reserve(rs.size());
  for (const Rule& r : rs.rules()) {
    auto premise = canonical_premise(r.premise);
    if (!premise) continue;
    kept.push_back({std::move(*premise), r.conclusion, r.confidence});
  }
  std::unordered_map<const Rule*, std::size_t, RuleKeyHash, RuleKeyEq> seen;
  seen.reserve(kept.size());
  std::vector<Rule> unique;
  unique.reserve(kept.size());
  std::vector<std::size_t> slot_of(kept.size());
  for (std::size_t i = 0; i < kept.size(); ++i) {
    auto [it, inserted] = seen.try_emplace(&kept[i], i);
    if (inserted) {
      slot_of[i] = unique.size();
      unique.push_back(kept[i]);
    } else {
      Rule& existing = unique[slot_of[it->second]];
      existing.confidence = std::max(existing.confidence, kept[i].confidence);
    }
  }
  return RuleSet(rs.num_classes(), rs.default_label(), rs.feature_names(), std::move(unique));
}

RuleSet merge(const RuleSet& a, const RuleSet& b) {
  if (a.num_classes() != b.num_classes())
    throw ConfigError("cannot merge rule sets with different class counts");
  if (a.default_label() != b.default_label())
    throw ConfigError("cannot merge rule sets with different default labels");
  std::vector<Rule> all = a.rules();
  all.insert(all.end(), b.rules().begin(), b.rules().end());
  const auto& names = a.feature_names().empty() ? b.feature_names() : a.feature_names();
  return canonicalize(RuleSet(a.num_classes(), a.default_label(), names, std::move(all)));
}

std::vector<double> feature_usage(const RuleSet& rs, std::size_t num_features) {
  std::vector<double> usage(num_features, 0.0);
  if (rs.empty()) return usage;
  std::vector<char> mentioned(num_features);
  for (const Rule& r : rs.rules()) {
    std::fill(mentioned.begin(), mentioned.end(), 0);
    for (const Term& t : r.premise)
      if (t.feature < num_features) mentioned[t.feature] = 1;
    for (std::size_t f = 0; f < num_features; ++f) usage[f] += mentioned[f];
  }
  for (double& u : usage) u /= static_cast<double>(rs.size());
  return usage;
}

RuleSet drop_low_confidence(const RuleSet& rs, double pct) {
  if (!(pct >= 0.0 && pct <= 100.0)) throw ConfigError("drop percentage must lie in [0, 100]");
  const auto drop = static_cast<std::size_t>(
      std::floor(pct * static_cast<double>(rs.size()) / 100.0 + 1e-9));
  if (drop == 0) return rs;
  std::vector<std::size_t> order(rs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return rs.rules()[a].confidence < rs.rules()[b].confidence;
  });
  std::vector<char> dropped(rs.size(), 0);
  for (std::size_t i = 0; i < drop; ++i) dropped[order[i]] = 1;
  std::vector<Rule> kept;
  for (std::size_t i = 0; i < rs.size(); ++i)
    if (!dropped[i]) kept.push_back(rs.rules()[i]);
  return RuleSet(rs.num_classes(), rs.default_label(), rs.feature_names(), std::move(kept));
}

RuleStats rule_stats(const RuleSet& rs) {
  if (rs.empty()) return {1, 0.0};
  const RuleSet canon = canonicalize(rs);
  if (canon.empty()) return {1, 0.0};
  std::size_t terms = 0;
  for (const Rule& r : canon.rules()) terms += r.premise.size();
  return {canon.size(), static_cast<double>(terms) / static_cast<double>(canon.size())};
}

std::string to_string(const Rule& rule, std::span<const std::string> feature_names,
                      std::span<const std::string> class_names) {
  std::ostringstream out;
  out.precision(6);
  out << "IF ";
  if (rule.premise.empty()) out << "TRUE";
  for (std::size_t i = 0; i < rule.premise.size(); ++i) {
    const Term& t = rule.premise[i];
    if (i) out << " AND ";
    if (t.feature < feature_names.size())
      out << feature_names[t.feature];
    else
      out << "x[" << t.feature << "]";
    out << ' ' << op_symbol(t.op) << ' ' << t.threshold;
  }
  out << " THEN ";
  const auto c = static_cast<std::size_t>(rule.conclusion);
  if (c < class_names.size())
    out << class_names[c];
  else
    out << rule.conclusion;
  out << " (confidence " << rule.confidence << ')';
  return out.str();
}

}  // namespace eclaire::rules
