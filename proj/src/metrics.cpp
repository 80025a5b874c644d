#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "eclaire/error.hpp"
#include "eclaire/eval.hpp"
#include "json.hpp"

namespace eclaire::eval {
namespace {

template <typename Get>
Summary summarize_by(const std::vector<FoldMetrics>& folds, Get get) {
  std::vector<double> v;
  v.reserve(folds.size());
  for (const auto& f : folds) v.push_back(get(f));
  return summarize(v);
}

std::string pm(const Summary& s, int precision) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f ± %.*f", precision, s.mean, precision, s.stddev);
  return buf;
}

nlohmann::json summary_json(const Summary& s) { return {{"mean", s.mean}, {"stddev", s.stddev}}; }

}  // namespace

double accuracy(std::span<const Label> predicted, std::span<const Label> truth) {
  if (predicted.size() != truth.size()) throw DataError("prediction/label length mismatch");
  if (truth.empty()) throw DataError("cannot score an empty sample");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i];
  return 100.0 * static_cast<double>(hits) / static_cast<double>(truth.size());
}

double accuracy(const rules::RuleSet& rs, const Matrix& x, std::span<const Label> truth) {
  return accuracy(rs.predict(x), truth);
}

double fidelity(const rules::RuleSet& rs, const Matrix& x, const mlp::Mlp& net) {
  return accuracy(rs.predict(x), net.predict_labels(x));
}

double auc_from_scores(std::span<const double> scores, std::span<const Label> truth,
                       Label positive) {
  if (scores.size() != truth.size()) throw DataError("score/label length mismatch");
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k) {
      if (truth[order[k]] == positive) {
        rank_sum += mid_rank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return 50.0;
  const double u = rank_sum - static_cast<double>(n_pos) * static_cast<double>(n_pos + 1) / 2.0;
  return 100.0 * u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double auc_binary(const rules::RuleSet& rs, const Matrix& x, std::span<const Label> truth,
                  Label positive) {
  if (rs.num_classes() != 2) throw ConfigError("AUC is only defined for binary tasks");
  std::vector<double> scores(x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    scores[r] = rs.score(x.row(r))[static_cast<std::size_t>(positive)];
  return auc_from_scores(scores, truth, positive);
}

Summary summarize(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

Summary EvaluationReport::accuracy() const {
  return summarize_by(folds, [](const FoldMetrics& f) { return f.accuracy; });
}
Summary EvaluationReport::fidelity() const {
  return summarize_by(folds, [](const FoldMetrics& f) { return f.fidelity; });
}
std::optional<Summary> EvaluationReport::auc() const {
  if (folds.empty() || !folds.front().auc) return std::nullopt;
  return summarize_by(folds, [](const FoldMetrics& f) { return f.auc.value_or(0.0); });
}
Summary EvaluationReport::rule_count() const {
  return summarize_by(folds, [](const FoldMetrics& f) { return static_cast<double>(f.rule_count); });
}
Summary EvaluationReport::avg_rule_length() const {
  return summarize_by(folds, [](const FoldMetrics& f) { return f.avg_rule_length; });
}
Summary EvaluationReport::seconds() const {
  return summarize_by(folds, [](const FoldMetrics& f) { return f.resources.seconds; });
}
Summary EvaluationReport::peak_bytes() const {
  return summarize_by(folds, [](const FoldMetrics& f) {
    return static_cast<double>(f.resources.peak_bytes);
  });
}
std::optional<Summary> EvaluationReport::validation_accuracy() const {
  if (folds.empty() || !folds.front().validation_accuracy) return std::nullopt;
  return summarize_by(folds, [](const FoldMetrics& f) { return f.validation_accuracy.value_or(0.0); });
}

std::vector<double> EvaluationReport::mean_feature_usage() const {
  if (folds.empty()) return {};
  std::vector<double> out(folds.front().feature_usage.size(), 0.0);
  for (const auto& f : folds)
    for (std::size_t i = 0; i < out.size() && i < f.feature_usage.size(); ++i)
      out[i] += f.feature_usage[i];
  for (double& v : out) v /= static_cast<double>(folds.size());
  return out;
}

std::string config_hash(extract::Method method, const extract::ExtractionConfig& cfg) {
  std::ostringstream s;
  s << "method=" << extract::to_string(method) << ";mu=" << cfg.min_samples
    << ";input_layer=" << cfg.include_input_layer << ";stride=" << cfg.layer_stride
    << ";fraction=" << cfg.sample_fraction << ";drop=" << cfg.rule_drop_pct
    << ";winnow=" << cfg.winnow << ";class_weighted=" << cfg.class_weighted
    << ";seed=" << cfg.seed << ";max_rules=" << cfg.max_rules
    << ";source=" << static_cast<int>(cfg.substitution_source);
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : s.str()) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string report_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["method"] = report.method;
  j["mu"] = report.mu;
  j["config_hash"] = report.config_hash;
  j["seed"] = report.seed;
  auto& folds = j["folds"] = nlohmann::json::array();
  for (const auto& f : report.folds) {
    nlohmann::json jf{{"accuracy", f.accuracy},
                      {"fidelity", f.fidelity},
                      {"rule_count", f.rule_count},
                      {"avg_rule_length", f.avg_rule_length},
                      {"feature_usage", f.feature_usage}};
    jf["auc"] = f.auc ? nlohmann::json(*f.auc) : nlohmann::json(nullptr);
    if (f.validation_accuracy) jf["validation_accuracy"] = *f.validation_accuracy;
    folds.push_back(std::move(jf));
  }
  auto& agg = j["aggregate"];
  agg["accuracy"] = summary_json(report.accuracy());
  agg["fidelity"] = summary_json(report.fidelity());
  const auto auc = report.auc();
  agg["auc"] = auc ? summary_json(*auc) : nlohmann::json(nullptr);
  agg["rule_count"] = summary_json(report.rule_count());
  agg["avg_rule_length"] = summary_json(report.avg_rule_length());
  if (const auto va = report.validation_accuracy()) agg["validation_accuracy"] = summary_json(*va);
  agg["feature_usage"] = report.mean_feature_usage();
  return j.dump(1);
}

std::string resources_to_json(const EvaluationReport& report) {
  nlohmann::json j;
  j["method"] = report.method;
  j["mu"] = report.mu;
  auto& folds = j["folds"] = nlohmann::json::array();
  for (const auto& f : report.folds)
    folds.push_back({{"seconds", f.resources.seconds}, {"peak_bytes", f.resources.peak_bytes}});
  j["aggregate"] = {{"seconds", summary_json(report.seconds())},
                    {"peak_bytes", summary_json(report.peak_bytes())}};
  return j.dump(1);
}

std::string reports_to_table(std::span<const EvaluationReport> reports) {
  const std::vector<std::string> header{"Method",       "Accuracy (%)", "AUC (%)",
                                        "Fidelity (%)", "Runtime (s)",  "Memory (MB)",
                                        "Rule Set Size", "Avg Rule Length"};
  std::vector<std::vector<std::string>> rows;
  for (const auto& r : reports) {
    const auto auc = r.auc();
    const Summary mem = r.peak_bytes();
    rows.push_back({r.method + "(mu = " + std::to_string(r.mu) + ")", pm(r.accuracy(), 1),
                    auc ? pm(*auc, 1) : "N/A", pm(r.fidelity(), 1), pm(r.seconds(), 2),
                    pm({mem.mean / 1e6, mem.stddev / 1e6}, 2), pm(r.rule_count(), 1),
                    pm(r.avg_rule_length(), 2)});
  }
  // "±" is two bytes in UTF-8 but one column wide.
  auto width = [](const std::string& s) {
    std::size_t w = 0;
    for (unsigned char c : s) w += (c & 0xC0) != 0x80;
    return w;
  };
  std::vector<std::size_t> widths(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    widths[c] = width(header[c]);
    for (const auto& row : rows) widths[c] = std::max(widths[c], width(row[c]));
  }
  std::ostringstream out;
  auto emit = [&](const std::vector<std::string>& row) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out << " | ";
      out << row[c] << std::string(widths[c] - width(row[c]), ' ');
    }
    out << '\n';
  };
  emit(header);
  std::size_t total = 0;
  for (auto w : widths) total += w;
  out << std::string(total + 3 * (widths.size() - 1), '-') << '\n';
  for (const auto& row : rows) emit(row);
  return out.str();
}

}  // namespace eclaire::eval
