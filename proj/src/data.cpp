#include "eclaire/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "eclaire/error.hpp"
#include "eclaire/rng.hpp"
#include "json.hpp"

namespace eclaire::data {
namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

bool parse_double(const std::string& text, double& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && std::isfinite(out);
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

void validate(const Dataset& ds) {
  const std::size_t n = ds.labels.size();
  if (n == 0) throw DataError("dataset has no samples");
  if (ds.features.rows() != n) throw DataError("feature rows do not match label count");
  if (ds.features.cols() == 0) throw DataError("dataset has no features");
  if (ds.feature_names.size() != ds.features.cols())
    throw DataError("feature_names size does not match feature count");
  if (ds.class_names.size() < 2) throw DataError("dataset needs at least two classes");
  for (Label y : ds.labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= ds.class_names.size())
      throw DataError("label index out of range");
  }
  for (double v : ds.features.values()) {
    if (!std::isfinite(v)) throw DataError("non-finite feature value");
  }
}

Dataset Dataset::make(Matrix features, Labels labels, std::vector<std::string> feature_names,
                      std::vector<std::string> class_names) {
  Dataset ds{std::move(features), std::move(labels), std::move(feature_names),
             std::move(class_names)};
  validate(ds);
  return ds;
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.features = features.select_rows(indices);
  out.labels = select<Label>(labels, indices);
  out.feature_names = feature_names;
  out.class_names = class_names;
  return out;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": missing header row");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header = split_line(line);
  for (auto& h : header) h = trim(h);

  std::size_t label_idx = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == label_column) {
      label_idx = c;
      break;
    }
  }
  if (label_idx == header.size()) {
    std::size_t idx = 0;
    auto [ptr, ec] =
        std::from_chars(label_column.data(), label_column.data() + label_column.size(), idx);
    if (ec != std::errc() || ptr != label_column.data() + label_column.size() ||
        idx >= header.size())
      throw DataError(path.string() + ": label column '" + label_column + "' not found");
    label_idx = idx;
  }
  if (header.size() < 2) throw DataError(path.string() + ": need at least one feature column");

  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c)
    if (c != label_idx) feature_names.push_back(header[c]);

  std::vector<double> values;
  Labels labels;
  std::vector<std::string> class_names;
  std::unordered_map<std::string, Label> class_index;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (trim(line).empty()) continue;
    auto cells = split_line(line);
    if (cells.size() != header.size())
      throw DataError(path.string() + ": row " + std::to_string(row) + " has " +
                      std::to_string(cells.size()) + " cells, expected " +
                      std::to_string(header.size()));
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::string cell = trim(cells[c]);
      if (c == label_idx) {
        auto [it, inserted] = class_index.try_emplace(cell, static_cast<Label>(class_names.size()));
        if (inserted) class_names.push_back(cell);
        labels.push_back(it->second);
        continue;
      }
      double v = 0.0;
      if (!parse_double(cell, v))
        throw DataError(path.string() + ": unparsable value '" + cell + "' at row " +
                        std::to_string(row) + ", column " + std::to_string(c + 1) + " (" +
                        header[c] + ")");
      values.push_back(v);
    }
  }
  if (labels.empty()) throw DataError(path.string() + ": no data rows");
  if (class_names.size() < 2)
    throw DataError(path.string() + ": fewer than 2 distinct classes in label column");

  const std::size_t n = labels.size();
  const std::size_t d = feature_names.size();
  return Dataset::make(Matrix(n, d, std::move(values)), std::move(labels),
                       std::move(feature_names), std::move(class_names));
}

void write_csv(const Dataset& ds, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  for (const auto& name : ds.feature_names) out << name << ',';
  out << "label\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    for (double v : ds.features.row(r)) out << format_double(v) << ',';
    out << ds.class_names[static_cast<std::size_t>(ds.labels[r])] << '\n';
  }
  if (!out) throw DataError("write failed for " + path.string());
}

Dataset gen_xor(std::size_t n, std::size_t dims, std::uint64_t seed) {
  if (dims < 2) throw ConfigError("gen_xor needs dims >= 2");
  if (n < 1) throw ConfigError("gen_xor needs n >= 1");
  Rng rng(seed);
  Matrix x(n, dims);
  Labels y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < dims; ++j) x(i, j) = rng.uniform();
    y[i] = round_half_up(x(i, 0)) ^ round_half_up(x(i, 1));
  }
  std::vector<std::string> names;
  for (std::size_t j = 0; j < dims; ++j) names.push_back("x" + std::to_string(j + 1));
  // Degenerate draws (tiny n) can miss a class; the class list stays {0, 1}.
  Dataset ds{std::move(x), std::move(y), std::move(names), {"0", "1"}};
  validate(ds);
  return ds;
}

std::vector<std::size_t> class_counts(std::span<const Label> labels, std::size_t num_classes) {
  std::vector<std::size_t> counts(num_classes, 0);
  for (Label y : labels) ++counts[static_cast<std::size_t>(y)];
  return counts;
}

std::vector<FoldSplit> stratified_kfold(std::span<const Label> labels, std::size_t num_classes,
                                        std::size_t k, std::uint64_t seed) {
  if (k < 2) throw ConfigError("stratified_kfold needs k >= 2");
  const auto counts = class_counts(labels, num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0 && counts[c] < k)
      throw DataError("class " + std::to_string(c) + " has " + std::to_string(counts[c]) +
                      " samples, fewer than k=" + std::to_string(k));
  }

  // Shuffle each class, then deal its members round-robin. The dealing
  // offset carries over between classes so fold sizes stay balanced.
  Rng rng(seed);
  std::vector<std::vector<std::size_t>> test(k);
  std::size_t offset = 0;
  for (std::size_t c = 0; c < num_classes; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (static_cast<std::size_t>(labels[i]) == c) members.push_back(i);
    rng.shuffle(members);
    for (std::size_t j = 0; j < members.size(); ++j) test[(offset + j) % k].push_back(members[j]);
    offset = (offset + members.size()) % k;
  }

  std::vector<FoldSplit> folds(k);
  std::vector<char> in_test(labels.size());
  for (std::size_t f = 0; f < k; ++f) {
    std::sort(test[f].begin(), test[f].end());
    std::fill(in_test.begin(), in_test.end(), 0);
    for (std::size_t i : test[f]) in_test[i] = 1;
    for (std::size_t i = 0; i < labels.size(); ++i)
      if (!in_test[i]) folds[f].train_indices.push_back(i);
    folds[f].test_indices = std::move(test[f]);
  }
  return folds;
}

std::vector<FoldSplit> stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed) {
  return stratified_kfold(ds.labels, ds.num_classes(), k, seed);
}

std::vector<std::size_t> subsample_indices(std::span<const Label> labels, std::size_t num_classes,
                                           double fraction, bool stratified, std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw ConfigError("subsample fraction must lie in (0, 1]");
  std::vector<std::size_t> all(labels.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (fraction == 1.0) return all;

  Rng rng(seed);
  std::vector<std::size_t> kept;
  if (stratified) {
    // Largest-remainder apportionment: the total matches the unstratified
    // size and every class stays within one sample of its exact share.
    const auto counts = class_counts(labels, num_classes);
    const auto total = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(labels.size())));
    std::vector<std::size_t> take(num_classes);
    std::vector<std::pair<double, std::size_t>> remainders;
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < num_classes; ++c) {
      const double exact = fraction * static_cast<double>(counts[c]);
      take[c] = static_cast<std::size_t>(std::floor(exact));
      assigned += take[c];
      remainders.push_back({exact - static_cast<double>(take[c]), c});
    }
    std::stable_sort(remainders.begin(), remainders.end(),
                     [](const auto& a, const auto& b) { return a.first > b.first; });
    for (std::size_t i = 0; assigned < total && i < remainders.size(); ++i) {
      const std::size_t c = remainders[i].second;
      if (take[c] < counts[c]) {
        ++take[c];
        ++assigned;
      }
    }
    for (std::size_t c = 0; c < num_classes; ++c) {
      std::vector<std::size_t> members;
      for (std::size_t i : all)
        if (static_cast<std::size_t>(labels[i]) == c) members.push_back(i);
      rng.shuffle(members);
      kept.insert(kept.end(), members.begin(),
                  members.begin() + static_cast<std::ptrdiff_t>(take[c]));
    }
  } else {
    rng.shuffle(all);
    const auto take =
        static_cast<std::size_t>(std::llround(fraction * static_cast<double>(labels.size())));
    kept.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(take));
  }
  if (kept.empty()) throw ConfigError("subsample would be empty");
  std::sort(kept.begin(), kept.end());
  return kept;
}

Dataset subsample(const Dataset& ds, double fraction, bool stratified, std::uint64_t seed) {
  auto idx = subsample_indices(ds.labels, ds.num_classes(), fraction, stratified, seed);
  return ds.subset(idx);
}

std::vector<double> class_weights(std::span<const Label> labels, std::size_t num_classes) {
  const auto counts = class_counts(labels, num_classes);
  const double n = static_cast<double>(labels.size());
  std::vector<double> w(num_classes, 0.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (counts[c] > 0) w[c] = n / (static_cast<double>(num_classes) * static_cast<double>(counts[c]));
  }
  return w;
}

std::vector<double> class_weights(const Dataset& ds) {
  return class_weights(ds.labels, ds.num_classes());
}

Label majority_label(std::span<const Label> labels, std::size_t num_classes) {
  const auto counts = class_counts(labels, num_classes);
  return static_cast<Label>(std::max_element(counts.begin(), counts.end()) - counts.begin());
}

std::string folds_to_json(const std::vector<FoldSplit>& folds) {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& f : folds) j.push_back(f.test_indices);
  return j.dump();
}

}  // namespace eclaire::data
