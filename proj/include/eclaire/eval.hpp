#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "eclaire/data.hpp"
#include "eclaire/extract.hpp"
#include "eclaire/memory.hpp"
#include "eclaire/mlp.hpp"
#include "eclaire/rules.hpp"

namespace eclaire::eval {

// All metrics are percentages in [0, 100].
double accuracy(std::span<const Label> predicted, std::span<const Label> truth);
double accuracy(const rules::RuleSet& rs, const Matrix& x, std::span<const Label> truth);

// Agreement with argmax of the network's output.
double fidelity(const rules::RuleSet& rs, const Matrix& x, const mlp::Mlp& net);

// Mann-Whitney AUC of `scores` for the positive class, tied scores sharing
// their average rank. Returns 50 when one class is absent.
double auc_from_scores(std::span<const double> scores, std::span<const Label> truth,
                       Label positive = 1);
double auc_binary(const rules::RuleSet& rs, const Matrix& x, std::span<const Label> truth,
                  Label positive = 1);

struct ResourceUsage {
  double seconds = 0.0;
  std::size_t peak_bytes = 0;  // peak live heap above the level at entry
};

template <typename Fn>
ResourceUsage measure(Fn&& fn) {
  memory::reset_peak();
  const std::size_t base = memory::current_bytes();
  const auto start = std::chrono::steady_clock::now();
  fn();
  const auto stop = std::chrono::steady_clock::now();
  const std::size_t peak = memory::peak_bytes();
  return {std::chrono::duration<double>(stop - start).count(), peak > base ? peak - base : 0};
}

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation over folds
};

Summary summarize(std::span<const double> values);

struct FoldMetrics {
  double accuracy = 0.0;
  double fidelity = 0.0;
  std::optional<double> auc;  // binary tasks only
  std::size_t rule_count = 0;
  double avg_rule_length = 0.0;
  std::vector<double> feature_usage;
  std::optional<double> validation_accuracy;
  ResourceUsage resources;
};

struct EvaluationReport {
  std::string method;
  std::size_t mu = 0;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::vector<FoldMetrics> folds;

  Summary accuracy() const;
  Summary fidelity() const;
  std::optional<Summary> auc() const;
  Summary rule_count() const;
  Summary avg_rule_length() const;
  Summary seconds() const;
  Summary peak_bytes() const;
  std::optional<Summary> validation_accuracy() const;
  std::vector<double> mean_feature_usage() const;
};

struct MuGrid {
  std::size_t min = 2;
  std::size_t max = 15;
  std::size_t step = 1;

  std::vector<std::size_t> values() const;
};

struct NetPreset {
  std::string name;
  std::vector<std::size_t> hidden_sizes;
  mlp::Activation activation = mlp::Activation::kTanh;
  std::size_t epochs = 150;
  std::size_t batch_size = 16;
};

// Architectures and training schedules of the reference tasks.
NetPreset net_preset(const std::string& name);
std::vector<std::string> net_preset_names();

// µ search ranges per task and method; fractional ranges scale with n_train.
MuGrid grid_preset(const std::string& task, extract::Method method, std::size_t n_train);

// Where each fold's network comes from: trained per fold from a preset, or a
// single fixed network shared by all folds.
struct NetSource {
  std::optional<NetPreset> preset;
  std::optional<mlp::Mlp> fixed;
  bool class_weighted = true;
};

struct FoldContext {
  std::size_t index = 0;
  data::FoldSplit split;
  Matrix x_train, x_test;
  Labels y_train, y_test;
  std::optional<mlp::Mlp> net;
  double net_test_accuracy = 0.0;
};

// Splits, trains (if requested), and caches everything extraction needs.
// Folds are trained in parallel on up to `threads` workers.
std::vector<FoldContext> prepare_folds(const data::Dataset& ds, std::size_t k, std::uint64_t seed,
                                       const NetSource& source, std::size_t threads = 1);

// Verifies that every fold's train and test indices are disjoint, that test
// folds partition the dataset, and that the cached matrices are exactly the
// indexed rows. Throws DataError on the first violation.
void audit_folds(const std::vector<FoldContext>& folds, const data::Dataset& ds);

enum class Selection { kTest, kValidation };

// Extracts on each fold's training split and scores on its test split.
EvaluationReport evaluate(const std::vector<FoldContext>& folds, extract::Method method,
                          const extract::ExtractionConfig& cfg, std::size_t num_classes,
                          std::uint64_t seed, bool with_validation = false);

struct CrossValResult {
  std::vector<EvaluationReport> reports;  // one per µ
  std::size_t best = 0;
  std::vector<double> net_test_accuracy;  // per fold
};

CrossValResult crossval(const std::vector<FoldContext>& folds, extract::Method method,
                        const MuGrid& grid, const extract::ExtractionConfig& base,
                        std::size_t num_classes, std::uint64_t seed,
                        Selection selection = Selection::kTest);

// FNV-1a over a canonical rendering of the method and configuration.
std::string config_hash(extract::Method method, const extract::ExtractionConfig& cfg);

// Metric JSON without wall-clock or memory fields, so reruns are byte-identical.
std::string report_to_json(const EvaluationReport& report);
// Wall-clock and memory per fold.
std::string resources_to_json(const EvaluationReport& report);
// Aligned text table, one row per report.
std::string reports_to_table(std::span<const EvaluationReport> reports);

}  // namespace eclaire::eval
