#include <algorithm>
#include <cmath>

#include "eclaire/error.hpp"
#include "eclaire/eval.hpp"

namespace eclaire::eval {
namespace {

using extract::Method;
using mlp::Activation;

const std::vector<NetPreset>& presets() {
  static const std::vector<NetPreset> all{
      {"xor", {64, 32, 16}, Activation::kTanh, 150, 16},
      {"metabric-er", {128, 16}, Activation::kTanh, 150, 16},
      {"metabric-hist", {128, 16}, Activation::kTanh, 150, 16},
      {"magic", {64, 32, 16}, Activation::kRelu, 200, 32},
      {"miniboone", {128, 64, 32, 16, 8}, Activation::kElu, 30, 16},
      {"letters", {128, 64}, Activation::kElu, 150, 32},
  };
  return all;
}

std::size_t scaled(double fraction, std::size_t n) {
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n))));
}

}  // namespace

NetPreset net_preset(const std::string& name) {
  for (const auto& p : presets())
    if (p.name == name) return p;
  throw ConfigError("unknown network preset '" + name + "'");
}

std::vector<std::string> net_preset_names() {
  std::vector<std::string> out;
  for (const auto& p : presets()) out.push_back(p.name);
  return out;
}

MuGrid grid_preset(const std::string& task, Method method, std::size_t n_train) {
  const bool termwise = extract::is_termwise(method);
  const bool tree_only = method == Method::kC5 || method == Method::kPedC5;
  if (task == "xor") return termwise ? MuGrid{25, 35, 1} : MuGrid{2, 15, 1};
  if (task == "metabric-er" || task == "metabric-hist")
    return termwise ? MuGrid{5, 15, 5} : MuGrid{2, 15, 1};
  if (task == "magic") {
    if (termwise) return {500, 1000, 50};
    return tree_only ? MuGrid{5, 50, 5} : MuGrid{50, 200, 25};
  }
  if (task == "miniboone") {
    if (termwise) return {scaled(0.02, n_train), scaled(0.1, n_train), scaled(0.005, n_train)};
    if (tree_only) return {5, 50, 5};
    return {scaled(0.0005, n_train), scaled(0.0015, n_train), scaled(0.0001, n_train)};
  }
  if (task == "letters") {
    if (termwise) return {scaled(0.25, n_train), scaled(0.5, n_train), scaled(0.05, n_train)};
    return {5, 15, 1};
  }
  throw ConfigError("no µ grid for task '" + task + "'");
}

}  // namespace eclaire::eval
