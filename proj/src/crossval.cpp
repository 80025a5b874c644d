#include <algorithm>
#include <vector>

#include "eclaire/error.hpp"
#include "eclaire/eval.hpp"
#include "eclaire/parallel.hpp"
#include "eclaire/rng.hpp"

namespace eclaire::eval {
namespace {

constexpr double kValidationFraction = 0.2;

FoldMetrics score_fold(const FoldContext& fold, const rules::RuleSet& rs, std::size_t num_classes) {
  FoldMetrics m;
  const Labels predicted = rs.predict(fold.x_test);
  m.accuracy = accuracy(predicted, fold.y_test);
  m.fidelity = fold.net ? accuracy(predicted, fold.net->predict_labels(fold.x_test)) : m.accuracy;
  if (num_classes == 2) m.auc = auc_binary(rs, fold.x_test, fold.y_test);
  const auto stats = rules::rule_stats(rs);
  m.rule_count = stats.rule_count;
  m.avg_rule_length = stats.avg_rule_length;
  m.feature_usage = rules::feature_usage(rs, fold.x_test.cols());
  return m;
}

}  // namespace

std::vector<std::size_t> MuGrid::values() const {
  if (step == 0 || min < 1 || max < min) throw ConfigError("µ grid is empty");
  std::vector<std::size_t> out;
  for (std::size_t mu = min; mu <= max; mu += step) out.push_back(mu);
  return out;
}

std::vector<FoldContext> prepare_folds(const data::Dataset& ds, std::size_t k, std::uint64_t seed,
                                       const NetSource& source, std::size_t threads) {
  if (source.preset && source.fixed) throw ConfigError("give a network preset or a fixed network, not both");
  if (source.fixed && source.fixed->input_width() != ds.num_features())
    throw ConfigError("network input width does not match the dataset");
  const auto splits = data::stratified_kfold(ds, k, seed);
  std::vector<FoldContext> folds(splits.size());
  parallel_for(splits.size(), std::max<std::size_t>(threads, 1), [&](std::size_t i) {
    FoldContext& f = folds[i];
    f.index = i;
    f.split = splits[i];
    f.x_train = ds.features.select_rows(f.split.train_indices);
    f.x_test = ds.features.select_rows(f.split.test_indices);
    f.y_train = select<Label>(ds.labels, f.split.train_indices);
    f.y_test = select<Label>(ds.labels, f.split.test_indices);
    if (source.preset) {
      const NetPreset& p = *source.preset;
      mlp::TrainConfig tc;
      tc.epochs = p.epochs;
      tc.batch_size = p.batch_size;
      tc.seed = derive_seed(seed, i);
      tc.class_weighted = source.class_weighted;
      f.net = mlp::train(ds.subset(f.split.train_indices), p.hidden_sizes, p.activation, tc);
    } else if (source.fixed) {
      f.net = *source.fixed;
    }
    if (f.net) f.net_test_accuracy = accuracy(f.net->predict_labels(f.x_test), f.y_test);
  });
  return folds;
}

void audit_folds(const std::vector<FoldContext>& folds, const data::Dataset& ds) {
  std::vector<int> test_hits(ds.size(), 0);
  for (const auto& f : folds) {
    std::vector<char> in_train(ds.size(), 0);
    for (std::size_t i : f.split.train_indices) {
      if (i >= ds.size()) throw DataError("fold " + std::to_string(f.index) + ": train index out of range");
      in_train[i] = 1;
    }
    for (std::size_t i : f.split.test_indices) {
      if (i >= ds.size()) throw DataError("fold " + std::to_string(f.index) + ": test index out of range");
      if (in_train[i])
        throw DataError("fold " + std::to_string(f.index) + ": sample " + std::to_string(i) +
                        " is in both train and test");
      ++test_hits[i];
    }
    if (f.split.train_indices.size() + f.split.test_indices.size() != ds.size())
      throw DataError("fold " + std::to_string(f.index) + ": split does not cover the dataset");
    if (f.x_train != ds.features.select_rows(f.split.train_indices) ||
        f.x_test != ds.features.select_rows(f.split.test_indices) ||
        f.y_train != select<Label>(ds.labels, f.split.train_indices) ||
        f.y_test != select<Label>(ds.labels, f.split.test_indices))
      throw DataError("fold " + std::to_string(f.index) + ": cached rows differ from indexed rows");
  }
  for (std::size_t i = 0; i < ds.size(); ++i)
    if (test_hits[i] != 1)
      throw DataError("sample " + std::to_string(i) + " appears in " + std::to_string(test_hits[i]) +
                      " test folds");
}

EvaluationReport evaluate(const std::vector<FoldContext>& folds, extract::Method method,
                          const extract::ExtractionConfig& cfg, std::size_t num_classes,
                          std::uint64_t seed, bool with_validation) {
  extract::validate(cfg);
  EvaluationReport report;
  report.method = std::string(extract::to_string(method));
  report.mu = cfg.min_samples;
  report.config_hash = config_hash(method, cfg);
  report.seed = seed;
  for (const auto& fold : folds) {
    if (!fold.net && method != extract::Method::kC5)
      throw ConfigError(report.method + " needs a network");
    const mlp::Mlp* net = fold.net ? &*fold.net : nullptr;
    Matrix x = fold.x_train;
    Labels y = fold.y_train;
    Matrix x_val;
    Labels y_val;
    if (with_validation) {
      const auto keep = data::subsample_indices(fold.y_train, num_classes, 1.0 - kValidationFraction,
                                                true, derive_seed(seed, fold.index));
      std::vector<char> kept(fold.y_train.size(), 0);
      for (std::size_t i : keep) kept[i] = 1;
      std::vector<std::size_t> held;
      for (std::size_t i = 0; i < kept.size(); ++i)
        if (!kept[i]) held.push_back(i);
      x = fold.x_train.select_rows(keep);
      y = select<Label>(fold.y_train, keep);
      x_val = fold.x_train.select_rows(held);
      y_val = select<Label>(fold.y_train, held);
    }
    std::optional<rules::RuleSet> rs;
    const ResourceUsage usage =
        measure([&] { rs.emplace(extract::run(method, net, x, y, num_classes, cfg)); });
    FoldMetrics m = score_fold(fold, *rs, num_classes);
    m.resources = usage;
    if (with_validation && !y_val.empty()) m.validation_accuracy = accuracy(*rs, x_val, y_val);
    report.folds.push_back(std::move(m));
  }
  return report;
}

CrossValResult crossval(const std::vector<FoldContext>& folds, extract::Method method,
                        const MuGrid& grid, const extract::ExtractionConfig& base,
                        std::size_t num_classes, std::uint64_t seed, Selection selection) {
  const auto mus = grid.values();
  CrossValResult out;
  for (const auto& f : folds) out.net_test_accuracy.push_back(f.net_test_accuracy);
  double best_score = -1.0;
  for (std::size_t mu : mus) {
    extract::ExtractionConfig cfg = base;
    cfg.min_samples = mu;
    auto report = evaluate(folds, method, cfg, num_classes, seed, selection == Selection::kValidation);
    const double score = selection == Selection::kValidation
                             ? report.validation_accuracy().value_or(Summary{}).mean
                             : report.accuracy().mean;
    // Strictly greater: ties keep the smaller µ.
    if (score > best_score) {
      best_score = score;
      out.best = out.reports.size();
    }
    out.reports.push_back(std::move(report));
  }
  return out;
}

}  // namespace eclaire::eval
