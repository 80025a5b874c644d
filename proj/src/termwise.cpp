#include <limits>
#include <map>
#include <set>

#include "eclaire/data.hpp"
#include "eclaire/error.hpp"
#include "eclaire/extract.hpp"
#include "extract_internal.hpp"

namespace eclaire::extract {
namespace {

// TRUE premises substituting each term of one layer.
using TermTable = std::map<rules::Term, std::vector<rules::Rule>>;

std::set<rules::Term> distinct_terms(std::span<const rules::Rule> rs) {
  std::set<rules::Term> out;
  for (const auto& r : rs) out.insert(r.premise.begin(), r.premise.end());
  return out;
}

std::vector<rules::Rule> true_premises(const rules::Term& term, const tree::SortedColumns& lower,
                                       const Matrix& upper, const ExtractionConfig& cfg) {
  Labels truth(upper.rows());
  for (std::size_t s = 0; s < upper.rows(); ++s) truth[s] = term.holds(upper.row(s)) ? 1 : 0;
  const auto t = tree::induce(lower, truth, 2, detail::tree_params(cfg, truth, 2));
  return tree::rules_for_label(t, 1);
}

TermTable build_table(const std::set<rules::Term>& terms, const tree::SortedColumns& lower,
                      const Matrix& upper, const ExtractionConfig& cfg) {
  TermTable table;
  for (const auto& term : terms) table.emplace(term, true_premises(term, lower, upper, cfg));
  return table;
}

std::size_t saturating_mul(std::size_t a, std::size_t b) {
  if (a != 0 && b > std::numeric_limits<std::size_t>::max() / a)
    return std::numeric_limits<std::size_t>::max();
  return a * b;
}

std::size_t product_size(const rules::Rule& rule, const TermTable& table) {
  std::size_t n = 1;
  for (const auto& t : rule.premise) n = saturating_mul(n, table.at(t).size());
  return n;
}

// Appends the Cartesian product of the substitutions of rule's terms.
void expand(const rules::Rule& rule, const TermTable& table, std::vector<rules::Rule>& out) {
  std::vector<const std::vector<rules::Rule>*> lists;
  for (const auto& t : rule.premise) {
    lists.push_back(&table.at(t));
    if (lists.back()->empty()) return;
  }
  std::vector<std::size_t> pick(lists.size(), 0);
  for (;;) {
    rules::Rule combined{{}, rule.conclusion, rule.confidence};
    for (std::size_t k = 0; k < lists.size(); ++k) {
      const auto& part = (*lists[k])[pick[k]];
      combined.premise.insert(combined.premise.end(), part.premise.begin(), part.premise.end());
      combined.confidence *= part.confidence;
    }
    out.push_back(std::move(combined));
    std::size_t k = lists.size();
    while (k > 0) {
      --k;
      if (++pick[k] < lists[k]->size()) break;
      pick[k] = 0;
      if (k == 0) return;
    }
    if (lists.empty()) return;
  }
}

// One substitution step: every rule over layer i becomes rules over layer i-1.
std::vector<rules::Rule> substitute_layer(std::span<const rules::Rule> current,
                                          const TermTable& table, std::size_t layer,
                                          std::size_t num_classes, Label default_label,
                                          std::size_t cap, std::size_t& pre_dedup) {
  std::size_t total = 0;
  for (const auto& r : current) {
    total = std::min(total + product_size(r, table), std::numeric_limits<std::size_t>::max() - 1);
    if (total > cap) throw ExplosionError(total, cap, layer);
  }
  std::vector<rules::Rule> next;
  next.reserve(total);
  for (const auto& r : current) expand(r, table, next);
  pre_dedup = next.size();
  return rules::canonicalize(rules::RuleSet(num_classes, default_label, {}, std::move(next)))
      .rules();
}

struct TopLevel {
  detail::Prepared prep;
  std::vector<Matrix> acts;
  Label default_label;
  std::vector<rules::Rule> rules;
};

TopLevel top_level(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg) {
  TopLevel top{detail::prepare(net, x, cfg), {}, 0, {}};
  const std::size_t num_classes = net.num_classes();
  top.default_label = data::majority_label(top.prep.predicted, num_classes);
  top.acts = net.all_activations(top.prep.x);
  const Matrix& last_hidden = top.acts[net.hidden_count()];
  const auto t = tree::induce(last_hidden, top.prep.predicted, num_classes,
                              detail::tree_params(cfg, top.prep.predicted, num_classes));
  top.rules = rules::drop_low_confidence(tree::to_ruleset(t, top.default_label), cfg.rule_drop_pct)
                  .rules();
  if (top.rules.size() > cfg.max_rules)
    throw ExplosionError(top.rules.size(), cfg.max_rules, net.hidden_count());
  return top;
}

}  // namespace

std::vector<rules::Rule> substitute_terms(const rules::Rule& rule, const Matrix& lower,
                                          const Matrix& upper, const tree::TreeParams& params,
                                          std::size_t max_rules) {
  if (lower.rows() != upper.rows()) throw DataError("layer activations disagree on sample count");
  const tree::SortedColumns cols(lower);
  TermTable table;
  for (const auto& term : rule.premise) {
    if (table.contains(term)) continue;
    Labels truth(upper.rows());
    for (std::size_t s = 0; s < upper.rows(); ++s) truth[s] = term.holds(upper.row(s)) ? 1 : 0;
    table.emplace(term, tree::rules_for_label(tree::induce(cols, truth, 2, params), 1));
  }
  const std::size_t n = product_size(rule, table);
  if (n > max_rules) throw ExplosionError(n, max_rules, 0);
  std::vector<rules::Rule> out;
  expand(rule, table, out);
  return out;
}

ExtractionResult remd_detailed(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg) {
  TopLevel top = top_level(net, x, cfg);
  const std::size_t num_classes = net.num_classes();
  ExtractionResult result;
  std::vector<rules::Rule> current = std::move(top.rules);
  for (std::size_t layer = net.hidden_count(); layer >= 1; --layer) {
    LayerTrace trace{layer, current.size(), 0};
    TermTable table;
    {
      const tree::SortedColumns lower(top.acts[layer - 1]);
      table = build_table(distinct_terms(current), lower, top.acts[layer], cfg);
    }
    current = substitute_layer(current, table, layer, num_classes, top.default_label,
                               cfg.max_rules, trace.substituted_rules);
    result.layers.push_back(trace);
  }
  result.pre_dedup_rules = result.layers.empty() ? current.size() : result.layers.back().substituted_rules;
  result.rules = rules::RuleSet(num_classes, top.default_label, {}, std::move(current));
  return result;
}

ExtractionResult deepred_star_detailed(const mlp::Mlp& net, const Matrix& x,
                                       const ExtractionConfig& cfg) {
  TopLevel top = top_level(net, x, cfg);
  const std::size_t num_classes = net.num_classes();
  const std::size_t depth = net.hidden_count();

  // Materialize every layer's table before any substitution. Terms needed at
  // layer i-1 are the terms of all TRUE premises stored for layer i.
  std::vector<TermTable> tables(depth + 1);
  std::size_t stored = 0;
  std::set<rules::Term> needed = distinct_terms(top.rules);
  for (std::size_t layer = depth; layer >= 1; --layer) {
    const tree::SortedColumns lower(top.acts[layer - 1]);
    tables[layer] = build_table(needed, lower, top.acts[layer], cfg);
    needed.clear();
    for (const auto& [term, premises] : tables[layer]) {
      stored += premises.size();
      for (const auto& p : premises) needed.insert(p.premise.begin(), p.premise.end());
    }
    if (stored > cfg.max_rules) throw ExplosionError(stored, cfg.max_rules, layer);
  }

  ExtractionResult result;
  std::vector<rules::Rule> current = std::move(top.rules);
  for (std::size_t layer = depth; layer >= 1; --layer) {
    LayerTrace trace{layer, current.size(), 0};
    current = substitute_layer(current, tables[layer], layer, num_classes, top.default_label,
                               cfg.max_rules, trace.substituted_rules);
    result.layers.push_back(trace);
  }
  result.pre_dedup_rules = result.layers.empty() ? current.size() : result.layers.back().substituted_rules;
  result.rules = rules::RuleSet(num_classes, top.default_label, {}, std::move(current));
  return result;
}

rules::RuleSet remd(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg) {
  return remd_detailed(net, x, cfg).rules;
}

rules::RuleSet deepred_star(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg) {
  return deepred_star_detailed(net, x, cfg).rules;
}

}  // namespace eclaire::extract
