#include <fstream>
#include <sstream>

#include "eclaire/error.hpp"
#include "eclaire/rules.hpp"
#include "json.hpp"

namespace eclaire::rules {

// Schema:
//   {"version": 1, "num_classes": L, "default_label": c, "feature_names": [...],
//    "rules": [{"terms": [{"feature": i, "op": ">"|"<=", "threshold": v}],
//               "conclusion": c, "confidence": p}]}
// Thresholds are written as shortest round-trip decimals.
std::string to_json(const RuleSet& rs) {
  nlohmann::json j;
  j["version"] = kRuleFileVersion;
  j["num_classes"] = rs.num_classes();
  j["default_label"] = rs.default_label();
  j["feature_names"] = rs.feature_names();
  auto& arr = j["rules"] = nlohmann::json::array();
  for (const Rule& r : rs.rules()) {
    nlohmann::json terms = nlohmann::json::array();
    for (const Term& t : r.premise) {
      terms.push_back({{"feature", t.feature},
                       {"op", std::string(op_symbol(t.op))},
                       {"threshold", t.threshold}});
    }
    arr.push_back({{"terms", std::move(terms)},
                   {"conclusion", r.conclusion},
                   {"confidence", r.confidence}});
  }
  return j.dump(1);
}

RuleSet from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed rule file: ") + e.what());
  }
  try {
    if (!j.contains("version")) throw DataError("rule file has no version");
    if (j.at("version").get<int>() != kRuleFileVersion)
      throw DataError("unsupported rule file version " + j.at("version").dump());
    std::vector<std::string> names;
    if (j.contains("feature_names")) names = j.at("feature_names").get<std::vector<std::string>>();
    RuleSet rs(j.at("num_classes").get<std::size_t>(), j.at("default_label").get<Label>(),
               std::move(names));
    for (const auto& jr : j.at("rules")) {
      Rule r;
      for (const auto& jt : jr.at("terms")) {
        r.premise.push_back({jt.at("feature").get<std::size_t>(),
                             op_from_symbol(jt.at("op").get<std::string>()),
                             jt.at("threshold").get<double>()});
      }
      r.conclusion = jr.at("conclusion").get<Label>();
      r.confidence = jr.at("confidence").get<double>();
      rs.add(std::move(r));
    }
    return rs;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed rule file: ") + e.what());
  } catch (const ConfigError& e) {
    throw DataError(std::string("invalid rule file: ") + e.what());
  }
}

void serialize(const RuleSet& rs, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << to_json(rs) << '\n';
}

RuleSet deserialize(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace eclaire::rules
