#include <filesystem>
#include <set>

#include "doctest.h"
#include "eclaire/error.hpp"
#include "eclaire/rules.hpp"
#include "fixtures.hpp"

using namespace eclaire;
using fixtures::gt;
using fixtures::le;
using rules::Rule;
using rules::RuleSet;

namespace {

RuleSet random_ruleset(Rng& rng, std::size_t features, std::size_t classes, std::size_t size) {
  RuleSet rs(classes, static_cast<Label>(rng.below(classes)));
  for (std::size_t i = 0; i < size; ++i) rs.add(fixtures::random_rule(rng, features, classes, 4));
  return rs;
}

// Random set in which no two rules are the same rule once tightened, so
// merging duplicates cannot change any vote count.
RuleSet random_distinct_ruleset(Rng& rng, std::size_t features, std::size_t classes,
                                std::size_t size) {
  RuleSet rs(classes, static_cast<Label>(rng.below(classes)));
  std::set<std::pair<rules::Premise, Label>> seen;
  for (std::size_t tries = 0; rs.size() < size && tries < 50 * size; ++tries) {
    auto r = fixtures::random_rule(rng, features, classes, 4);
    const auto c = rules::canonical_premise(r.premise);
    if (c && !seen.insert({*c, r.conclusion}).second) continue;
    rs.add(std::move(r));
  }
  return rs;
}

}  // namespace

TEST_CASE("eval_premise") {
  const std::vector<double> x{0.5, 0.2};
  CHECK(rules::eval_premise({}, x));
  CHECK_FALSE(rules::eval_premise(rules::Premise{gt(0, 0.5)}, x));
  CHECK(rules::eval_premise(rules::Premise{le(0, 0.5)}, x));

  const rules::Premise p{gt(0, 0.5), le(1, 0.5)};
  const double pts[4][2] = {{0.25, 0.25}, {0.25, 0.75}, {0.75, 0.25}, {0.75, 0.75}};
  const bool expected[4] = {false, false, true, false};
  for (int i = 0; i < 4; ++i) CHECK(rules::eval_premise(p, pts[i]) == expected[i]);
}

TEST_CASE("terms") {
  CHECK(rules::negate(gt(2, 0.3)) == le(2, 0.3));
  CHECK(rules::op_symbol(rules::Op::kGreater) == ">");
  CHECK(rules::op_from_symbol("<=") == rules::Op::kLessEqual);
  CHECK_THROWS_AS(rules::op_from_symbol(">="), DataError);
}

TEST_CASE("canonical_premise") {
  CHECK(rules::canonical_premise(std::vector{gt(0, 0.2), gt(0, 0.5)}) == rules::Premise{gt(0, 0.5)});
  CHECK(rules::canonical_premise(std::vector{le(0, 0.2), le(0, 0.5)}) == rules::Premise{le(0, 0.2)});
  CHECK_FALSE(rules::canonical_premise(std::vector{gt(0, 0.5), le(0, 0.3)}).has_value());
  CHECK_FALSE(rules::canonical_premise(std::vector{gt(0, 0.5), le(0, 0.5)}).has_value());
  CHECK(rules::canonical_premise(std::vector{le(1, 0.9), gt(0, 0.1), gt(1, 0.2)}) ==
        rules::Premise{gt(0, 0.1), gt(1, 0.2), le(1, 0.9)});
}

TEST_CASE("predict") {
  SUBCASE("empty rule set uses the default") {
    const RuleSet rs(3, 2);
    CHECK(rs.predict(std::vector<double>{0.1}) == 2);
  }
  SUBCASE("one fired rule") {
    const RuleSet rs(2, 0, {}, {Rule{{gt(0, 0.5)}, 1, 0.6}});
    CHECK(rs.predict(std::vector<double>{0.7}) == 1);
    CHECK(rs.predict(std::vector<double>{0.3}) == 0);
  }
  SUBCASE("majority vote") {
    const RuleSet rs(2, 1, {},
                     {Rule{{gt(0, 0.1)}, 0, 0.2}, Rule{{gt(0, 0.2)}, 0, 0.2},
                      Rule{{gt(0, 0.3)}, 1, 0.99}});
    CHECK(rs.predict(std::vector<double>{0.9}) == 0);
  }
  SUBCASE("vote ties go to confidence, then the lower class") {
    const RuleSet by_conf(2, 0, {}, {Rule{{}, 0, 0.4}, Rule{{}, 1, 0.6}});
    CHECK(by_conf.predict(std::vector<double>{0.0}) == 1);
    const RuleSet by_class(3, 0, {}, {Rule{{}, 2, 0.5}, Rule{{}, 1, 0.5}});
    CHECK(by_class.predict(std::vector<double>{0.0}) == 1);
  }
  SUBCASE("invalid rules are rejected") {
    RuleSet rs(2, 0);
    CHECK_THROWS_AS(rs.add(Rule{{}, 2, 0.5}), ConfigError);
    CHECK_THROWS_AS(rs.add(Rule{{}, 0, 0.0}), ConfigError);
    CHECK_THROWS_AS(RuleSet(2, 5), ConfigError);
  }
}

TEST_CASE("score") {
  SUBCASE("no fired rule is one-hot on the default") {
    const RuleSet rs(2, 1, {}, {Rule{{gt(0, 10.0)}, 0, 0.9}});
    CHECK(rs.score(std::vector<double>{0.0}) == std::vector<double>{0.0, 1.0});
  }
  SUBCASE("confidence-weighted") {
    const RuleSet rs(2, 0, {}, {Rule{{}, 0, 0.9}, Rule{{}, 1, 0.1}});
    const auto s = rs.score(std::vector<double>{0.0});
    CHECK(s[0] == doctest::Approx(0.9));
    CHECK(s[1] == doctest::Approx(0.1));
  }
  SUBCASE("argmax agrees with predict without confidence tiebreaks") {
    Rng rng(8);
    int compared = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const auto rs = random_ruleset(rng, 3, 3, 6);
      for (int p = 0; p < 20; ++p) {
        const std::vector<double> x{rng.uniform(), rng.uniform(), rng.uniform()};
        std::vector<std::size_t> votes(3, 0);
        for (const auto& r : rs.rules())
          if (rules::eval_premise(r.premise, x)) ++votes[static_cast<std::size_t>(r.conclusion)];
        // Only points where a single class wins the vote outright and its
        // voters all carry the same confidence as the others.
        const auto s = rs.score(x);
        const Label pred = rs.predict(x);
        const std::size_t top = *std::max_element(votes.begin(), votes.end());
        if (std::count(votes.begin(), votes.end(), top) != 1) continue;
        bool uniform = true;
        double conf = -1;
        for (const auto& r : rs.rules()) {
          if (!rules::eval_premise(r.premise, x)) continue;
          if (conf < 0) conf = r.confidence;
          uniform &= r.confidence == conf;
        }
        if (!uniform) continue;
        ++compared;
        CHECK(static_cast<Label>(std::max_element(s.begin(), s.end()) - s.begin()) == pred);
      }
    }
    CHECK(compared > 50);
  }
}

TEST_CASE("canonicalize") {
  SUBCASE("tightens and removes vacuous rules") {
    const RuleSet rs(2, 0, {},
                     {Rule{{gt(0, 0.2), gt(0, 0.5)}, 1, 0.5}, Rule{{gt(0, 0.5), le(0, 0.3)}, 0, 0.5}});
    const auto c = rules::canonicalize(rs);
    REQUIRE(c.size() == 1);
    CHECK(c.rules()[0].premise == rules::Premise{gt(0, 0.5)});
  }
  SUBCASE("duplicates keep the highest confidence and first position") {
    const RuleSet rs(2, 0, {},
                     {Rule{{gt(0, 0.5)}, 1, 0.3}, Rule{{le(1, 0.5)}, 0, 0.4},
                      Rule{{gt(0, 0.5), gt(0, 0.1)}, 1, 0.8}});
    const auto c = rules::canonicalize(rs);
    REQUIRE(c.size() == 2);
    CHECK(c.rules()[0] == Rule{{gt(0, 0.5)}, 1, 0.8});
    CHECK(c.rules()[1].premise == rules::Premise{le(1, 0.5)});
  }
  SUBCASE("idempotent and prediction-preserving on random sets") {
    Rng rng(1);
    for (int trial = 0; trial < 1000; ++trial) {
      const auto any = random_ruleset(rng, 3, 3, rng.below(12));
      CHECK(rules::canonicalize(rules::canonicalize(any)) == rules::canonicalize(any));
      if (trial % 20 != 0) continue;
      const auto rs = random_distinct_ruleset(rng, 3, 3, rng.below(12));
      const auto c = rules::canonicalize(rs);
      for (int p = 0; p < 10000; ++p) {
        // Lattice points hit thresholds exactly, exercising the boundaries.
        const std::vector<double> x{static_cast<double>(rng.below(11)) / 10.0, rng.uniform(),
                                    static_cast<double>(rng.below(11)) / 10.0};
        if (rs.predict(x) != c.predict(x)) {
          FAIL("canonicalize changed a prediction");
          break;
        }
      }
    }
  }
}

TEST_CASE("merge") {
  const RuleSet a(2, 0, {}, {Rule{{gt(0, 0.5)}, 1, 0.5}, Rule{{le(0, 0.2)}, 0, 0.5}});
  const RuleSet b(2, 0, {}, {Rule{{gt(1, 0.5)}, 1, 0.5}});
  const RuleSet overlap(2, 0, {}, {Rule{{gt(0, 0.5)}, 1, 0.9}, Rule{{gt(2, 0.5)}, 0, 0.5}});
  CHECK(rules::merge(a, RuleSet(2, 0)) == a);
  CHECK(rules::merge(a, b).size() == 3);
  CHECK(rules::merge(a, overlap).size() == 3);
  CHECK_THROWS_AS(rules::merge(a, RuleSet(3, 0)), ConfigError);
  CHECK_THROWS_AS(rules::merge(a, RuleSet(2, 1)), ConfigError);
}

TEST_CASE("feature_usage") {
  CHECK(rules::feature_usage(RuleSet(2, 0, {}, {Rule{{gt(0, 0.5)}, 0, 1}}), 3) ==
        std::vector<double>{1, 0, 0});
  CHECK(rules::feature_usage(RuleSet(2, 0, {}, {Rule{{gt(0, 0.5)}, 0, 1}, Rule{{le(1, 0.5)}, 1, 1}}), 3) ==
        std::vector<double>{0.5, 0.5, 0});
  CHECK(rules::feature_usage(RuleSet(2, 0, {}, {Rule{{}, 0, 1}, Rule{{gt(1, 0.1), le(1, 0.9)}, 1, 1}}), 2) ==
        std::vector<double>{0, 0.5});
  CHECK(rules::feature_usage(RuleSet(2, 0), 2) == std::vector<double>{0, 0});
}

TEST_CASE("drop_low_confidence") {
  RuleSet rs(2, 0);
  for (int i = 0; i < 8; ++i) rs.add(Rule{{gt(0, i / 10.0)}, i % 2, (i % 4 + 1) / 10.0});
  CHECK(rules::drop_low_confidence(rs, 0) == rs);
  CHECK(rules::drop_low_confidence(rs, 100).empty());
  const auto kept = rules::drop_low_confidence(rs, 25);
  REQUIRE(kept.size() == 6);
  // Confidences 0.1 at positions 0 and 4 go first.
  CHECK(kept.rules()[0] == rs.rules()[1]);
  CHECK(kept.rules()[3] == rs.rules()[5]);
  // Equal confidences: the earlier rule is dropped first.
  RuleSet ties(2, 0, {}, {Rule{{gt(0, 0.1)}, 0, 0.5}, Rule{{gt(0, 0.2)}, 0, 0.5}});
  CHECK(rules::drop_low_confidence(ties, 50).rules()[0] == ties.rules()[1]);
}

TEST_CASE("rule_stats") {
  const auto empty = rules::rule_stats(RuleSet(2, 0));
  CHECK(empty.rule_count == 1);
  CHECK(empty.avg_rule_length == 0.0);
  const auto two = rules::rule_stats(
      RuleSet(2, 0, {}, {Rule{{gt(0, 0.1), gt(1, 0.1)}, 0, 1}, Rule{{gt(0, 0.1), gt(1, 0.1), gt(2, 0.1), gt(3, 0.1)}, 1, 1}}));
  CHECK(two.rule_count == 2);
  CHECK(two.avg_rule_length == 3.0);
}

TEST_CASE("serialization") {
  SUBCASE("round-trip on random sets") {
    Rng rng(12);
    for (int trial = 0; trial < 1000; ++trial) {
      auto rs = random_ruleset(rng, 4, 3, rng.below(6));
      // Thresholds with long expansions.
      RuleSet noisy(rs.num_classes(), rs.default_label(), {"a", "b", "c", "d"});
      for (auto r : rs.rules()) {
        for (auto& t : r.premise) t.threshold += rng.uniform() * 1e-9;
        noisy.add(r);
      }
      CHECK(rules::from_json(rules::to_json(noisy)) == noisy);
    }
  }
  SUBCASE("file round-trip") {
    const RuleSet rs(2, 1, {"x1", "x2"}, {Rule{{gt(0, 0.1), le(1, 1.0 / 3.0)}, 0, 0.875}});
    const auto p = std::filesystem::temp_directory_path() / "eclaire_test_rules.json";
    rules::serialize(rs, p);
    CHECK(rules::deserialize(p) == rs);
  }
  SUBCASE("hand-written file") {
    const auto rs = rules::from_json(R"({
      "version": 1, "num_classes": 2, "default_label": 0, "feature_names": ["a", "b"],
      "rules": [{"terms": [{"feature": 1, "op": ">", "threshold": 0.25}], "conclusion": 1, "confidence": 0.9}]
    })");
    REQUIRE(rs.size() == 1);
    CHECK(rs.predict(std::vector<double>{0.0, 0.3}) == 1);
    CHECK(rs.predict(std::vector<double>{0.0, 0.2}) == 0);
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(rules::from_json(R"({"version": 1, "num_classes": 2, "default_label": 0,
      "feature_names": [], "rules": [{"terms": [{"feature": 0, "op": "=>", "threshold": 1}],
      "conclusion": 0, "confidence": 1}]})"),
                    DataError);
    CHECK_THROWS_AS(rules::from_json(R"({"version": 7})"), DataError);
    CHECK_THROWS_AS(rules::from_json("{"), DataError);
  }
}

TEST_CASE("to_string uses names") {
  const Rule r{{gt(0, 0.5), le(1, 0.25)}, 1, 0.75};
  const std::vector<std::string> f{"age", "size"}, c{"no", "yes"};
  CHECK(rules::to_string(r, f, c) == "IF age > 0.5 AND size <= 0.25 THEN yes (confidence 0.75)");
}
