#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "eclaire/matrix.hpp"

namespace eclaire::data {

// Feature matrix plus dense integer labels. Construct through make() or the
// loaders; both validate the invariants below.
//   - at least one sample, one feature, two classes
//   - every label in [0, num_classes)
//   - one name per feature and per class
//   - all feature values finite
struct Dataset {
  Matrix features;
  Labels labels;
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t num_features() const noexcept { return features.cols(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  static Dataset make(Matrix features, Labels labels, std::vector<std::string> feature_names,
                      std::vector<std::string> class_names);

  Dataset subset(std::span<const std::size_t> indices) const;
};

void validate(const Dataset& ds);

struct FoldSplit {
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> test_indices;
};

// label_column is matched against the header first; if no header cell
// matches and it parses as an integer it is used as a zero-based index.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

// Writes features then a trailing "label" column holding class names.
void write_csv(const Dataset& ds, const std::filesystem::path& path);

// Uniform samples on [0,1]^dims labelled round(x1) xor round(x2).
Dataset gen_xor(std::size_t n, std::size_t dims, std::uint64_t seed);

// round() with ties going up, as used by the XOR labelling rule.
inline int round_half_up(double v) { return v >= 0.5 ? 1 : 0; }

std::vector<FoldSplit> stratified_kfold(const Dataset& ds, std::size_t k, std::uint64_t seed);
std::vector<FoldSplit> stratified_kfold(std::span<const Label> labels, std::size_t num_classes,
                                        std::size_t k, std::uint64_t seed);

// Sorted sample indices kept by a without-replacement subsample.
std::vector<std::size_t> subsample_indices(std::span<const Label> labels, std::size_t num_classes,
                                           double fraction, bool stratified, std::uint64_t seed);
Dataset subsample(const Dataset& ds, double fraction, bool stratified, std::uint64_t seed);

std::vector<std::size_t> class_counts(std::span<const Label> labels, std::size_t num_classes);

// weight_c = N / (L * count_c); classes absent from labels get weight 0.
std::vector<double> class_weights(std::span<const Label> labels, std::size_t num_classes);
std::vector<double> class_weights(const Dataset& ds);

// Most frequent label, ties to the lowest index.
Label majority_label(std::span<const Label> labels, std::size_t num_classes);

// JSON array of test-index arrays, one per fold.
std::string folds_to_json(const std::vector<FoldSplit>& folds);

}  // namespace eclaire::data
