#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eclaire/matrix.hpp"
#include "eclaire/mlp.hpp"
#include "eclaire/rules.hpp"
#include "eclaire/tree.hpp"

namespace eclaire::extract {

enum class Method { kEclaire, kEclaireStar, kRemd, kDeepredStar, kPedC5, kC5 };

std::string_view to_string(Method m);
Method method_from_string(std::string_view name);
bool is_termwise(Method m);

// Where the clause-substitution trees read their features from. kInputs maps
// premises back onto the raw inputs. kHidden feeds the layer's own activations
// instead; its rules are over hidden units and cannot be applied to inputs.
enum class SubstitutionSource { kInputs, kHidden };

struct ExtractionConfig {
  std::size_t min_samples = 2;  // µ: minimum samples for a tree split
  std::size_t n_threads = 1;
  bool include_input_layer = false;
  // Hidden layers used are 1, 1 + stride, 1 + 2*stride, ...
  std::size_t layer_stride = 1;
  double sample_fraction = 1.0;
  double rule_drop_pct = 0.0;
  bool winnow = true;
  bool class_weighted = false;
  std::uint64_t seed = 0;
  // Cap on materialized rules for the term-wise baselines.
  std::size_t max_rules = 1'000'000;
  SubstitutionSource substitution_source = SubstitutionSource::kInputs;
};

void validate(const ExtractionConfig& cfg);

// Layer indices an ECLAIRE run visits (0 is the input layer).
std::vector<std::size_t> selected_layers(std::size_t hidden_count, const ExtractionConfig& cfg);

struct LayerTrace {
  std::size_t layer = 0;
  std::size_t intermediate_rules = 0;  // after confidence dropping
  std::size_t substituted_rules = 0;   // before deduplication
};

struct ExtractionResult {
  rules::RuleSet rules;
  std::vector<LayerTrace> layers;
  std::size_t pre_dedup_rules = 0;
};

// Clause-wise substitution of one intermediate rule: induces a tree from
// `inputs` to the premise truth values (0/1) and returns every TRUE-leaf
// premise as a rule concluding rule.conclusion with confidence
// rule.confidence * leaf confidence. Empty when no leaf predicts TRUE.
std::vector<rules::Rule> substitute_clause(const rules::Rule& rule, const Matrix& inputs,
                                           std::span<const Label> premise_truth,
                                           const tree::TreeParams& params);
std::vector<rules::Rule> substitute_clause(const rules::Rule& rule,
                                           const tree::SortedColumns& inputs,
                                           std::span<const Label> premise_truth,
                                           const tree::TreeParams& params);

// Term-wise substitution of one rule whose terms are over `upper`: every term
// is replaced by the TRUE premises of a tree from `lower` to the term's truth,
// and the replacements are combined by Cartesian product. Returns the raw
// products (Π N_j of them) before tightening or deduplication. Throws
// ExplosionError when Π N_j exceeds max_rules.
std::vector<rules::Rule> substitute_terms(const rules::Rule& rule, const Matrix& lower,
                                          const Matrix& upper, const tree::TreeParams& params,
                                          std::size_t max_rules = 1'000'000);

ExtractionResult eclaire_detailed(const mlp::Mlp& net, const Matrix& x,
                                  const ExtractionConfig& cfg);
rules::RuleSet eclaire(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg);

// REM-D: substitutes each layer's terms as soon as its tables are built.
ExtractionResult remd_detailed(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg);
rules::RuleSet remd(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg);

// DeepRED*: builds every layer's term tables first, then substitutes.
ExtractionResult deepred_star_detailed(const mlp::Mlp& net, const Matrix& x,
                                       const ExtractionConfig& cfg);
rules::RuleSet deepred_star(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg);

// Pedagogical baseline: one tree from inputs to the network's predictions.
rules::RuleSet pedc5(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg);

// Tree on the true labels; no network involved.
rules::RuleSet c5_direct(const Matrix& x, std::span<const Label> y, std::size_t num_classes,
                         const ExtractionConfig& cfg);

// Dispatches by method. `net` may be null only for kC5; `y` is used only by kC5.
rules::RuleSet run(Method method, const mlp::Mlp* net, const Matrix& x, std::span<const Label> y,
                   std::size_t num_classes, const ExtractionConfig& cfg);

}  // namespace eclaire::extract
