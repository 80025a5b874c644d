#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "eclaire/data.hpp"
#include "eclaire/error.hpp"
#include "eclaire/eval.hpp"
#include "eclaire/extract.hpp"
#include "eclaire/mlp.hpp"
#include "eclaire/rules.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace eclaire;

namespace {

enum ExitCode { kOk = 0, kOther = 1, kConfig = 2, kData = 3, kExplosion = 4 };

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!text.empty() && text.back() != '\n') out << '\n';
}

// Extraction flags shared by extract and crossval.
struct ExtractFlags {
  std::string method = "eclaire";
  std::size_t threads = 1;
  bool input_layer = false;
  std::size_t stride = 1;
  double sample_fraction = 1.0;
  double drop_pct = 0.0;
  bool no_winnow = false;
  bool class_weighted = false;
  std::size_t max_rules = 1'000'000;
  bool hidden_substitution = false;
  std::uint64_t seed = 0;

  void attach(CLI::App& app) {
    app.add_option("--method", method, "eclaire, eclaire_star, remd, deepred_star, pedc5, c5")
        ->capture_default_str();
    app.add_option("--threads", threads, "Extraction workers")->capture_default_str();
    app.add_flag("--input-layer", input_layer, "Also extract from the input layer");
    app.add_option("--layer-stride", stride, "Use every stride-th hidden layer")->capture_default_str();
    app.add_option("--sample-fraction", sample_fraction, "Stratified training subsample")
        ->capture_default_str();
    app.add_option("--drop-pct", drop_pct, "Drop this percent of low-confidence intermediate rules")
        ->capture_default_str();
    app.add_flag("--no-winnow", no_winnow, "Disable zero-gain feature filtering");
    app.add_flag("--class-weighted", class_weighted, "Class-weighted tree induction");
    app.add_option("--max-rules", max_rules, "Rule cap for term-wise methods")->capture_default_str();
    app.add_flag("--hidden-substitution", hidden_substitution)->group("");
  }

  extract::ExtractionConfig config(std::size_t mu) const {
    extract::ExtractionConfig c;
    c.min_samples = mu;
    c.n_threads = threads;
    c.include_input_layer = input_layer;
    c.layer_stride = stride;
    c.sample_fraction = sample_fraction;
    c.rule_drop_pct = drop_pct;
    c.winnow = !no_winnow;
    c.class_weighted = class_weighted;
    c.max_rules = max_rules;
    c.seed = seed;
    c.substitution_source =
        hidden_substitution ? extract::SubstitutionSource::kHidden : extract::SubstitutionSource::kInputs;
    return c;
  }
};

nlohmann::json metrics_json(const rules::RuleSet& rs, const data::Dataset& ds,
                            const mlp::Mlp* net) {
  nlohmann::json j;
  j["accuracy"] = eval::accuracy(rs, ds.features, ds.labels);
  j["fidelity"] = net ? nlohmann::json(eval::fidelity(rs, ds.features, *net)) : nlohmann::json(nullptr);
  j["auc"] = ds.num_classes() == 2 ? nlohmann::json(eval::auc_binary(rs, ds.features, ds.labels))
                                   : nlohmann::json(nullptr);
  const auto stats = rules::rule_stats(rs);
  j["rule_count"] = stats.rule_count;
  j["avg_rule_length"] = stats.avg_rule_length;
  return j;
}

int cmd_gen_xor(std::size_t n, std::size_t dims, std::uint64_t seed, const fs::path& out) {
  data::write_csv(data::gen_xor(n, dims, seed), out);
  return kOk;
}

struct TrainArgs {
  fs::path data, out, log;
  std::string label_column = "label";
  std::vector<std::size_t> hidden{64, 32, 16};
  std::string activation = "tanh";
  std::size_t epochs = 150, batch = 16;
  double lr = 1e-3;
  std::uint64_t seed = 0;
  bool unweighted = false;
};

int cmd_train(const TrainArgs& a) {
  const auto ds = data::load_csv(a.data, a.label_column);
  mlp::TrainConfig tc;
  tc.epochs = a.epochs;
  tc.batch_size = a.batch;
  tc.learning_rate = a.lr;
  tc.seed = a.seed;
  tc.class_weighted = !a.unweighted;
  std::string log = "epoch,loss\n";
  const auto net = mlp::train(ds, a.hidden, mlp::activation_from_string(a.activation), tc,
                              [&](const mlp::EpochLog& e) {
                                char buf[64];
                                std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", e.epoch, e.loss);
                                log += buf;
                              });
  mlp::save(net, a.out);
  write_text(a.log.empty() ? fs::path(a.out.string() + ".log.csv") : a.log, log);
  std::printf("train accuracy %.2f%%\n", eval::accuracy(net.predict_labels(ds.features), ds.labels));
  return kOk;
}

struct ExtractArgs {
  fs::path data, weights, out, metrics;
  std::string label_column = "label";
  std::size_t mu = 2;
  ExtractFlags flags;
};

int cmd_extract(const ExtractArgs& a) {
  const auto ds = data::load_csv(a.data, a.label_column);
  const auto method = extract::method_from_string(a.flags.method);
  std::optional<mlp::Mlp> net;
  if (!a.weights.empty()) net = mlp::load(a.weights);
  if (!net && method != extract::Method::kC5)
    throw ConfigError("--weights is required for " + a.flags.method);
  if (net && net->input_width() != ds.num_features())
    throw DataError("network input width does not match the dataset");
  const auto cfg = a.flags.config(a.mu);
  std::optional<rules::RuleSet> rs;
  const auto usage = eval::measure([&] {
    rs.emplace(extract::run(method, net ? &*net : nullptr, ds.features, ds.labels, ds.num_classes(), cfg));
  });
  rs->set_feature_names(ds.feature_names);
  rules::serialize(*rs, a.out);
  auto m = metrics_json(*rs, ds, net ? &*net : nullptr);
  m["method"] = a.flags.method;
  m["mu"] = a.mu;
  m["seconds"] = usage.seconds;
  m["peak_bytes"] = usage.peak_bytes;
  if (!a.metrics.empty()) write_text(a.metrics, m.dump(1));
  std::cout << m.dump(1) << '\n';
  return kOk;
}

int cmd_evaluate(const fs::path& rules_path, const fs::path& data_path,
                 const std::string& label_column, const fs::path& weights, const fs::path& out) {
  const auto rs = rules::deserialize(rules_path);
  const auto ds = data::load_csv(data_path, label_column);
  if (rs.num_classes() != ds.num_classes()) throw DataError("rule set and dataset disagree on class count");
  std::optional<mlp::Mlp> net;
  if (!weights.empty()) net = mlp::load(weights);
  const auto m = metrics_json(rs, ds, net ? &*net : nullptr);
  if (!out.empty()) write_text(out, m.dump(1));
  std::cout << m.dump(1) << '\n';
  return kOk;
}

struct CrossvalArgs {
  std::string task = "xor";
  std::string label_column = "label";
  std::size_t n = 1000, dims = 10;
  std::string net_preset;
  fs::path weights;
  std::optional<std::size_t> mu_min, mu_max, mu_step;
  std::size_t k = 5;
  std::uint64_t seed = 0;
  std::size_t train_threads = 1;
  std::string selection = "test";
  fs::path out = "crossval_out";
  ExtractFlags flags;
};

int cmd_crossval(CrossvalArgs a) {
  if (a.net_preset.empty() == a.weights.empty())
    throw ConfigError("give exactly one of --net-preset and --weights");
  data::Dataset ds;
  std::string grid_task;
  if (a.task == "xor") {
    ds = data::gen_xor(a.n, a.dims, a.seed);
    grid_task = "xor";
  } else if (a.task.rfind("csv:", 0) == 0) {
    ds = data::load_csv(a.task.substr(4), a.label_column);
    grid_task = a.net_preset;
  } else {
    throw ConfigError("task must be 'xor' or 'csv:<path>'");
  }
  const auto method = extract::method_from_string(a.flags.method);
  a.flags.seed = a.seed;

  eval::NetSource source;
  if (!a.net_preset.empty()) source.preset = eval::net_preset(a.net_preset);
  else source.fixed = mlp::load(a.weights);

  auto folds = eval::prepare_folds(ds, a.k, a.seed, source, a.train_threads);
  eval::audit_folds(folds, ds);

  eval::MuGrid grid;
  if (!a.mu_min || !a.mu_max || !a.mu_step) {
    const std::size_t n_train = folds.front().y_train.size();
    try {
      grid = eval::grid_preset(grid_task, method, n_train);
    } catch (const ConfigError&) {
      if (!a.mu_min || !a.mu_max || !a.mu_step)
        throw ConfigError("no bundled µ grid for this task; pass --mu-min, --mu-max and --mu-step");
    }
  }
  if (a.mu_min) grid.min = *a.mu_min;
  if (a.mu_max) grid.max = *a.mu_max;
  if (a.mu_step) grid.step = *a.mu_step;

  eval::Selection selection;
  if (a.selection == "test") selection = eval::Selection::kTest;
  else if (a.selection == "validation") selection = eval::Selection::kValidation;
  else throw ConfigError("--selection must be 'test' or 'validation'");

  const auto result = eval::crossval(folds, method, grid, a.flags.config(grid.min), ds.num_classes(),
                                     a.seed, selection);

  fs::create_directories(a.out);
  std::vector<data::FoldSplit> splits;
  for (const auto& f : folds) splits.push_back(f.split);
  write_text(a.out / "folds.json", data::folds_to_json(splits));
  nlohmann::json resources = nlohmann::json::array();
  for (const auto& r : result.reports) {
    write_text(a.out / ("report_mu" + std::to_string(r.mu) + ".json"), eval::report_to_json(r));
    resources.push_back(nlohmann::json::parse(eval::resources_to_json(r)));
  }
  write_text(a.out / "resources.json", resources.dump(1));
  write_text(a.out / "table.txt", eval::reports_to_table(result.reports));

  const auto& best = result.reports[result.best];
  nlohmann::json summary;
  summary["method"] = best.method;
  summary["selection"] = a.selection;
  summary["best_mu"] = best.mu;
  summary["net_test_accuracy"] = result.net_test_accuracy;
  summary["best"] = nlohmann::json::parse(eval::report_to_json(best));
  write_text(a.out / "summary.json", summary.dump(1));

  std::string usage_csv = "feature,usage\n";
  const auto usage = best.mean_feature_usage();
  for (std::size_t i = 0; i < usage.size(); ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), ",%.6f\n", usage[i]);
    usage_csv += ds.feature_names[i] + buf;
  }
  write_text(a.out / "feature_usage.csv", usage_csv);

  std::cout << eval::reports_to_table(std::span(&best, 1));
  std::printf("best mu %zu\n", best.mu);
  return kOk;
}

int cmd_feature_usage(const fs::path& rules_path, std::optional<std::size_t> num_features,
                      const fs::path& out) {
  const auto rs = rules::deserialize(rules_path);
  std::size_t width = rs.feature_names().size();
  for (const auto& r : rs.rules())
    for (const auto& t : r.premise) width = std::max(width, t.feature + 1);
  if (num_features) {
    if (*num_features < width) throw ConfigError("--num-features is smaller than the rules require");
    width = *num_features;
  }
  const auto usage = rules::feature_usage(rs, width);
  std::string csv = "feature,usage\n";
  for (std::size_t i = 0; i < width; ++i) {
    const std::string name = i < rs.feature_names().size() ? rs.feature_names()[i] : "x" + std::to_string(i + 1);
    char buf[64];
    std::snprintf(buf, sizeof(buf), ",%.6f\n", usage[i]);
    csv += name + buf;
  }
  if (!out.empty()) write_text(out, csv);
  std::cout << csv;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Rule extraction from neural networks"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config", "", "INI file; [crossval] keys mirror the flags, which override it");
  std::function<int()> action;

  auto* gen = app.add_subcommand("gen_xor", "Write an XOR dataset as CSV")->alias("gen-xor");
  std::size_t gen_n = 1000, gen_dims = 10;
  std::uint64_t gen_seed = 0;
  fs::path gen_out;
  gen->add_option("--n", gen_n)->capture_default_str();
  gen->add_option("--dims", gen_dims)->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--out", gen_out)->required();
  gen->callback([&] { action = [&] { return cmd_gen_xor(gen_n, gen_dims, gen_seed, gen_out); }; });

  auto* train = app.add_subcommand("train", "Train an MLP and write its weights");
  TrainArgs ta;
  train->add_option("--data", ta.data)->required()->check(CLI::ExistingFile);
  train->add_option("--label-column", ta.label_column)->capture_default_str();
  train->add_option("--hidden", ta.hidden, "Comma-separated hidden sizes")->delimiter(',')->capture_default_str();
  train->add_option("--activation", ta.activation, "tanh, relu, elu")->capture_default_str();
  train->add_option("--epochs", ta.epochs)->capture_default_str();
  train->add_option("--batch", ta.batch)->capture_default_str();
  train->add_option("--lr", ta.lr)->capture_default_str();
  train->add_option("--seed", ta.seed)->capture_default_str();
  train->add_flag("--unweighted", ta.unweighted, "Plain cross-entropy without class weights");
  train->add_option("--out", ta.out)->required();
  train->add_option("--log", ta.log, "Training log CSV (default: <out>.log.csv)");
  train->callback([&] { action = [&] { return cmd_train(ta); }; });

  auto* ext = app.add_subcommand("extract", "Extract a rule set");
  ExtractArgs ea;
  ext->add_option("--data", ea.data)->required()->check(CLI::ExistingFile);
  ext->add_option("--label-column", ea.label_column)->capture_default_str();
  ext->add_option("--weights", ea.weights)->check(CLI::ExistingFile);
  ext->add_option("--mu", ea.mu, "Minimum samples per split")->capture_default_str();
  ext->add_option("--seed", ea.flags.seed)->capture_default_str();
  ea.flags.attach(*ext);
  ext->add_option("--out", ea.out)->required();
  ext->add_option("--metrics", ea.metrics, "Also write metrics JSON here");
  ext->callback([&] { action = [&] { return cmd_extract(ea); }; });

  auto* evl = app.add_subcommand("evaluate", "Score a rule set on a dataset");
  fs::path ev_rules, ev_data, ev_weights, ev_out;
  std::string ev_label = "label";
  evl->add_option("--rules", ev_rules)->required()->check(CLI::ExistingFile);
  evl->add_option("--data", ev_data)->required()->check(CLI::ExistingFile);
  evl->add_option("--label-column", ev_label)->capture_default_str();
  evl->add_option("--weights", ev_weights)->check(CLI::ExistingFile);
  evl->add_option("--out", ev_out);
  evl->callback([&] {
    action = [&] { return cmd_evaluate(ev_rules, ev_data, ev_label, ev_weights, ev_out); };
  });

  auto* cv = app.add_subcommand("crossval", "Stratified k-fold evaluation over a µ grid");
  CrossvalArgs ca;
  cv->add_option("--task", ca.task, "xor or csv:<path>")->capture_default_str();
  cv->add_option("--label-column", ca.label_column)->capture_default_str();
  cv->add_option("--n", ca.n, "XOR sample count")->capture_default_str();
  cv->add_option("--dims", ca.dims, "XOR dimensions")->capture_default_str();
  cv->add_option("--net-preset", ca.net_preset, "Train per fold from this preset");
  cv->add_option("--weights", ca.weights, "Use this network for every fold")->check(CLI::ExistingFile);
  cv->add_option("--mu-min", ca.mu_min);
  cv->add_option("--mu-max", ca.mu_max);
  cv->add_option("--mu-step", ca.mu_step);
  cv->add_option("--folds", ca.k)->capture_default_str();
  cv->add_option("--seed", ca.seed)->capture_default_str();
  cv->add_option("--train-threads", ca.train_threads, "Folds trained concurrently")->capture_default_str();
  cv->add_option("--selection", ca.selection, "test or validation")->capture_default_str();
  cv->add_option("--out", ca.out, "Output directory")->capture_default_str();
  ca.flags.attach(*cv);
  cv->callback([&] { action = [&] { return cmd_crossval(ca); }; });

  auto* fu = app.add_subcommand("feature_usage", "Fraction of rules mentioning each feature")
                 ->alias("feature-usage");
  fs::path fu_rules, fu_out;
  std::optional<std::size_t> fu_width;
  fu->add_option("--rules", fu_rules)->required()->check(CLI::ExistingFile);
  fu->add_option("--num-features", fu_width);
  fu->add_option("--out", fu_out);
  fu->callback([&] { action = [&] { return cmd_feature_usage(fu_rules, fu_width, fu_out); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }

  try {
    return action();
  } catch (const ExplosionError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExplosion;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const DataError& e) {
    std::fprintf(stderr, "data error: %s\n", e.what());
    return kData;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kOther;
  }
}
