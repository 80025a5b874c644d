#include <algorithm>
#include <optional>

#include "eclaire/data.hpp"
#include "eclaire/error.hpp"
#include "eclaire/extract.hpp"
#include "eclaire/parallel.hpp"
#include "extract_internal.hpp"

namespace eclaire::extract {

namespace detail {

Prepared prepare(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg) {
  validate(cfg);
  if (x.cols() != net.input_width())
    throw DataError("data has " + std::to_string(x.cols()) + " features but the network expects " +
                    std::to_string(net.input_width()));
  if (x.rows() == 0) throw DataError("no samples to extract from");
  Labels predicted = net.predict_labels(x);
  if (cfg.sample_fraction >= 1.0) return {x, std::move(predicted)};
  const auto keep = data::subsample_indices(predicted, net.num_classes(), cfg.sample_fraction,
                                            true, cfg.seed);
  return {x.select_rows(keep), select<Label>(predicted, keep)};
}

tree::TreeParams tree_params(const ExtractionConfig& cfg, std::span<const Label> targets,
                             std::size_t num_classes) {
  tree::TreeParams p;
  p.min_samples_split = cfg.min_samples;
  p.winnow = cfg.winnow;
  if (cfg.class_weighted) p.class_weights = data::class_weights(targets, num_classes);
  return p;
}

}  // namespace detail

void validate(const ExtractionConfig& cfg) {
  if (cfg.min_samples < 2) throw ConfigError("mu (min samples per split) must be >= 2");
  if (cfg.n_threads < 1) throw ConfigError("n_threads must be >= 1");
  if (cfg.layer_stride < 1) throw ConfigError("layer_stride must be >= 1");
  if (!(cfg.sample_fraction > 0.0) || cfg.sample_fraction > 1.0)
    throw ConfigError("sample_fraction must lie in (0, 1]");
  if (!(cfg.rule_drop_pct >= 0.0) || cfg.rule_drop_pct > 100.0)
    throw ConfigError("rule_drop_pct must lie in [0, 100]");
  if (cfg.max_rules < 1) throw ConfigError("max_rules must be >= 1");
}

std::vector<std::size_t> selected_layers(std::size_t hidden_count, const ExtractionConfig& cfg) {
  std::vector<std::size_t> out;
  if (cfg.include_input_layer) out.push_back(0);
  for (std::size_t i = 1; i <= hidden_count; i += cfg.layer_stride) out.push_back(i);
  return out;
}

std::vector<rules::Rule> substitute_clause(const rules::Rule& rule,
                                           const tree::SortedColumns& inputs,
                                           std::span<const Label> premise_truth,
                                           const tree::TreeParams& params) {
  if (premise_truth.size() != inputs.rows())
    throw DataError("premise truth vector does not match sample count");
  const tree::DecisionTree t = tree::induce(inputs, premise_truth, 2, params);
  auto out = tree::rules_for_label(t, 1);
  for (auto& r : out) {
    r.conclusion = rule.conclusion;
    r.confidence *= rule.confidence;
  }
  return out;
}

std::vector<rules::Rule> substitute_clause(const rules::Rule& rule, const Matrix& inputs,
                                           std::span<const Label> premise_truth,
                                           const tree::TreeParams& params) {
  if (premise_truth.size() != inputs.rows())
    throw DataError("premise truth vector does not match sample count");
  return substitute_clause(rule, tree::SortedColumns(inputs), premise_truth, params);
}

ExtractionResult eclaire_detailed(const mlp::Mlp& net, const Matrix& x,
                                  const ExtractionConfig& cfg) {
  const detail::Prepared prep = detail::prepare(net, x, cfg);
  const Matrix& xs = prep.x;
  const Labels& predicted = prep.predicted;
  const std::size_t num_classes = net.num_classes();
  const Label default_label = data::majority_label(predicted, num_classes);
  const auto layers = selected_layers(net.hidden_count(), cfg);
  if (layers.empty()) throw ConfigError("no layers selected for extraction");

  const std::vector<Matrix> acts = net.all_activations(xs);
  const tree::SortedColumns input_columns(xs);

  // Intermediate rule sets, one work unit per layer.
  std::vector<std::vector<rules::Rule>> intermediate(layers.size());
  std::vector<std::optional<tree::SortedColumns>> hidden_columns(layers.size());
  const tree::TreeParams layer_params = detail::tree_params(cfg, predicted, num_classes);
  parallel_for(layers.size(), cfg.n_threads, [&](std::size_t li) {
    const Matrix& h = acts[layers[li]];
    tree::SortedColumns cols(h);
    const auto t = tree::induce(cols, predicted, num_classes, layer_params);
    auto rs = rules::drop_low_confidence(tree::to_ruleset(t, default_label), cfg.rule_drop_pct);
    intermediate[li] = rs.rules();
    if (cfg.substitution_source == SubstitutionSource::kHidden) hidden_columns[li] = std::move(cols);
  });

  // Clause substitutions, one work unit per (layer, intermediate rule).
  struct Unit {
    std::size_t layer_slot;
    std::size_t rule;
  };
  std::vector<Unit> units;
  for (std::size_t li = 0; li < layers.size(); ++li)
    for (std::size_t r = 0; r < intermediate[li].size(); ++r) units.push_back({li, r});

  std::vector<std::vector<rules::Rule>> substituted(units.size());
  parallel_for(units.size(), cfg.n_threads, [&](std::size_t u) {
    const auto [li, ri] = units[u];
    const rules::Rule& rule = intermediate[li][ri];
    const Matrix& h = acts[layers[li]];
    Labels truth(h.rows());
    for (std::size_t s = 0; s < h.rows(); ++s)
      truth[s] = rules::eval_premise(rule.premise, h.row(s)) ? 1 : 0;
    const auto params = detail::tree_params(cfg, truth, 2);
    const tree::SortedColumns& source = cfg.substitution_source == SubstitutionSource::kHidden
                                            ? *hidden_columns[li]
                                            : input_columns;
    substituted[u] = substitute_clause(rule, source, truth, params);
  });

  ExtractionResult result;
  result.layers.resize(layers.size());
  for (std::size_t li = 0; li < layers.size(); ++li) {
    result.layers[li].layer = layers[li];
    result.layers[li].intermediate_rules = intermediate[li].size();
  }
  std::vector<rules::Rule> all;
  for (std::size_t u = 0; u < units.size(); ++u) {
    result.layers[units[u].layer_slot].substituted_rules += substituted[u].size();
    for (auto& r : substituted[u]) all.push_back(std::move(r));
  }
  result.pre_dedup_rules = all.size();
  result.rules = rules::canonicalize(rules::RuleSet(num_classes, default_label, {}, std::move(all)));
  return result;
}

rules::RuleSet eclaire(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg) {
  return eclaire_detailed(net, x, cfg).rules;
}

}  // namespace eclaire::extract
