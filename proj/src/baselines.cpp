#include "eclaire/data.hpp"
#include "eclaire/error.hpp"
#include "eclaire/extract.hpp"
#include "extract_internal.hpp"

namespace eclaire::extract {

std::string_view to_string(Method m) {
  switch (m) {
    case Method::kEclaire:
      return "eclaire";
    case Method::kEclaireStar:
      return "eclaire_star";
    case Method::kRemd:
      return "remd";
    case Method::kDeepredStar:
      return "deepred_star";
    case Method::kPedC5:
      return "pedc5";
    case Method::kC5:
      return "c5";
  }
  return "?";
}

Method method_from_string(std::string_view name) {
  for (Method m : {Method::kEclaire, Method::kEclaireStar, Method::kRemd, Method::kDeepredStar,
                   Method::kPedC5, Method::kC5}) {
    if (to_string(m) == name) return m;
  }
  throw ConfigError("unknown method '" + std::string(name) +
                    "' (expected eclaire, eclaire_star, remd, deepred_star, pedc5 or c5)");
}

bool is_termwise(Method m) { return m == Method::kRemd || m == Method::kDeepredStar; }

rules::RuleSet pedc5(const mlp::Mlp& net, const Matrix& x, const ExtractionConfig& cfg) {
  const auto prep = detail::prepare(net, x, cfg);
  const std::size_t num_classes = net.num_classes();
  const auto t = tree::induce(prep.x, prep.predicted, num_classes,
                              detail::tree_params(cfg, prep.predicted, num_classes));
  return tree::to_ruleset(t, data::majority_label(prep.predicted, num_classes));
}

rules::RuleSet c5_direct(const Matrix& x, std::span<const Label> y, std::size_t num_classes,
                         const ExtractionConfig& cfg) {
  validate(cfg);
  if (y.size() != x.rows()) throw DataError("label count does not match sample count");
  Matrix xs = x;
  Labels ys(y.begin(), y.end());
  if (cfg.sample_fraction < 1.0) {
    const auto keep = data::subsample_indices(y, num_classes, cfg.sample_fraction, true, cfg.seed);
    xs = x.select_rows(keep);
    ys = select<Label>(y, keep);
  }
  const auto t = tree::induce(xs, ys, num_classes, detail::tree_params(cfg, ys, num_classes));
  return tree::to_ruleset(t, data::majority_label(ys, num_classes));
}

rules::RuleSet run(Method method, const mlp::Mlp* net, const Matrix& x, std::span<const Label> y,
                   std::size_t num_classes, const ExtractionConfig& cfg) {
  if (method == Method::kC5) return c5_direct(x, y, num_classes, cfg);
  if (net == nullptr) throw ConfigError(std::string(to_string(method)) + " needs a network");
  switch (method) {
    case Method::kEclaire:
      return eclaire(*net, x, cfg);
    case Method::kEclaireStar: {
      ExtractionConfig star = cfg;
      star.include_input_layer = true;
      return eclaire(*net, x, star);
    }
    case Method::kRemd:
      return remd(*net, x, cfg);
    case Method::kDeepredStar:
      return deepred_star(*net, x, cfg);
    case Method::kPedC5:
      return pedc5(*net, x, cfg);
    case Method::kC5:
      break;
  }
  return c5_direct(x, y, num_classes, cfg);
}

}  // namespace eclaire::extract
