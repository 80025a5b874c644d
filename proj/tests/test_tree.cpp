#include <algorithm>
#include <numeric>
#include <set>

#include "doctest.h"
#include "eclaire/data.hpp"
#include "eclaire/error.hpp"
#include "eclaire/eval.hpp"
#include "eclaire/tree.hpp"
#include "fixtures.hpp"

using namespace eclaire;

namespace {

tree::TreeParams mu(std::size_t m) {
  tree::TreeParams p;
  p.min_samples_split = m;
  return p;
}

struct RandomTask {
  Matrix x;
  Labels y;
  std::size_t classes;
};

// Features are quantized so equal values and label noise both occur.
RandomTask random_task(Rng& rng) {
  const std::size_t n = rng.below(200) + 1;
  const std::size_t m = rng.below(8) + 1;
  const std::size_t classes = rng.below(3) + 2;
  const std::size_t levels = rng.below(20) + 2;
  RandomTask t{Matrix(n, m), Labels(n), classes};
  for (double& v : t.x.values()) v = static_cast<double>(rng.below(levels));
  for (auto& l : t.y) l = static_cast<Label>(rng.below(classes));
  return t;
}

}  // namespace

TEST_CASE("leaf confidence is Laplace-corrected") {
  CHECK(tree::leaf_confidence(0, 0) == 0.5);
  CHECK(tree::leaf_confidence(8, 10) == 0.75);
  CHECK(tree::leaf_confidence(10, 10) == doctest::Approx(11.0 / 12.0));
}

TEST_CASE("pure input gives a single leaf") {
  const auto x = fixtures::random_matrix(30, 3, 1);
  const Labels y(30, 1);
  const auto t = tree::induce(x, y, 2, mu(2));
  REQUIRE(t.leaf_count() == 1);
  CHECK(t.root().label == 1);
  CHECK(t.root().confidence == doctest::Approx(31.0 / 32.0));
  CHECK(t.root().histogram == std::vector<std::size_t>{0, 30});
}

TEST_CASE("two points split at the midpoint") {
  const Matrix x(2, 1, std::vector<double>{0.0, 1.0});
  const Labels y{0, 1};
  const auto t = tree::induce(x, y, 2, mu(2));
  REQUIRE(t.nodes().size() == 3);
  CHECK_FALSE(t.root().is_leaf);
  CHECK(t.root().feature == 0);
  CHECK(t.root().threshold == 0.5);
  const auto& left = t.nodes()[t.root().left];
  const auto& right = t.nodes()[t.root().right];
  CHECK(left.label == 0);
  CHECK(right.label == 1);
  CHECK(left.histogram == std::vector<std::size_t>{1, 0});
  CHECK(right.histogram == std::vector<std::size_t>{0, 1});
}

TEST_CASE("µ blocks splits of small nodes") {
  const Matrix x(2, 1, std::vector<double>{0.0, 1.0});
  const Labels y{0, 1};
  CHECK(tree::induce(x, y, 2, mu(3)).leaf_count() == 1);
  CHECK_THROWS_AS(tree::induce(x, y, 2, mu(1)), ConfigError);
  CHECK_THROWS_AS(tree::induce(Matrix(0, 1), Labels{}, 2, mu(2)), DataError);
}

TEST_CASE("XOR on raw features stays near chance") {
  const auto train = data::gen_xor(1000, 10, 0);
  const auto test = data::gen_xor(1000, 10, 1);
  const auto t = tree::induce(train.features, train.labels, 2, mu(2));
  const auto rs = tree::to_ruleset(t, data::majority_label(train.labels, 2));
  CHECK(eval::accuracy(rs, test.features, test.labels) < 65.0);
  CHECK(t.leaf_count() <= 10);
}

TEST_CASE("to_ruleset") {
  SUBCASE("single leaf gives one empty-premise rule") {
    const Labels y(10, 0);
    const auto rs = tree::to_ruleset(tree::induce(fixtures::random_matrix(10, 2, 0), y, 2, mu(2)), 0);
    REQUIRE(rs.size() == 1);
    CHECK(rs.rules()[0].premise.empty());
    CHECK(rules::rule_stats(rs).avg_rule_length == 0.0);
  }
  SUBCASE("quadrants give four rules of two terms") {
    const auto x = fixtures::grid2d(10);
    Labels y(x.rows());
    for (std::size_t r = 0; r < x.rows(); ++r)
      y[r] = static_cast<Label>(2 * (x(r, 0) > 0.5) + (x(r, 1) > 0.5));
    const auto t = tree::induce(x, y, 4, mu(2));
    CHECK(t.depth() == 2);
    const auto rs = tree::to_ruleset(t, 0);
    REQUIRE(rs.size() == 4);
    std::set<Label> concl;
    for (const auto& r : rs.rules()) {
      CHECK(r.premise.size() == 2);
      concl.insert(r.conclusion);
    }
    CHECK(concl.size() == 4);
    CHECK(eval::accuracy(rs, x, y) == 100.0);
  }
  SUBCASE("repeated splits on one feature collapse to tightest bounds") {
    Matrix x(40, 1);
    Labels y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      x(i, 0) = static_cast<double>(i);
      y[i] = (i / 10) % 2;
    }
    const auto rs = tree::to_ruleset(tree::induce(x, y, 2, mu(2)), 0);
    CHECK(rs.size() == 4);
    for (const auto& r : rs.rules()) {
      CHECK(r.premise.size() <= 2);
      CHECK(rules::canonical_premise(r.premise) == r.premise);
    }
  }
}

TEST_CASE("structural bounds and partition over random inductions") {
  Rng rng(2024);
  std::size_t violations = 0;
  for (int trial = 0; trial < 250; ++trial) {
    const auto task = random_task(rng);
    const std::size_t n = task.y.size();
    const std::size_t m_split = rng.below(4) + 2;
    const auto t = tree::induce(task.x, task.y, task.classes, mu(m_split));
    const auto rs = tree::to_ruleset(t, 0);
    std::set<rules::Term> unique;
    std::size_t longest = 0;
    for (const auto& r : rs.rules()) {
      unique.insert(r.premise.begin(), r.premise.end());
      longest = std::max(longest, r.premise.size());
    }
    bool ok = t.leaf_count() <= n && rs.size() == t.leaf_count() && t.depth() <= n - 1 &&
              longest <= n - 1 && unique.size() <= 2 * (n - 1);
    for (std::size_t s = 0; s < n; ++s) {
      std::size_t fired = 0;
      for (const auto& r : rs.rules()) fired += rules::eval_premise(r.premise, task.x.row(s));
      ok &= fired == 1;
    }
    for (const auto& node : t.nodes()) {
      if (!node.is_leaf) continue;
      ok &= node.confidence > 0.0 && node.confidence <= 1.0;
    }
    const std::size_t total = std::accumulate(t.nodes().begin(), t.nodes().end(), std::size_t{0},
                                              [](std::size_t acc, const tree::Node& nd) {
                                                if (!nd.is_leaf) return acc;
                                                return acc + std::accumulate(nd.histogram.begin(),
                                                                             nd.histogram.end(),
                                                                             std::size_t{0});
                                              });
    ok &= total == n;
    if (!ok) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("raising µ never adds leaves") {
  Rng rng(77);
  for (int trial = 0; trial < 40; ++trial) {
    const auto task = random_task(rng);
    std::size_t previous = task.y.size() + 1;
    for (std::size_t m = 2; m <= 40; m += 3) {
      const std::size_t leaves = tree::induce(task.x, task.y, task.classes, mu(m)).leaf_count();
      CHECK(leaves <= previous);
      previous = leaves;
    }
  }
}

TEST_CASE("induction is deterministic and input-form independent") {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const auto task = random_task(rng);
    const auto a = tree::to_ruleset(tree::induce(task.x, task.y, task.classes, mu(2)), 0);
    const auto b = tree::to_ruleset(tree::induce(task.x, task.y, task.classes, mu(2)), 0);
    const tree::SortedColumns cols(task.x);
    const auto c = tree::to_ruleset(tree::induce(cols, task.y, task.classes, mu(2)), 0);
    CHECK(a == b);
    CHECK(a == c);
  }
}

TEST_CASE("ties go to the lowest feature index") {
  // Two identical columns: the split must use feature 0.
  Matrix x(20, 2);
  Labels y(20);
  for (std::size_t i = 0; i < 20; ++i) {
    x(i, 0) = x(i, 1) = static_cast<double>(i);
    y[i] = i >= 10;
  }
  const auto t = tree::induce(x, y, 2, mu(2));
  CHECK(t.root().feature == 0);
  CHECK(t.root().threshold == 9.5);
}

TEST_CASE("class weights change the leaf majority") {
  const Matrix x(10, 1, 0.0);
  Labels y(10, 0);
  y[9] = 1;
  tree::TreeParams p = mu(2);
  CHECK(tree::induce(x, y, 2, p).root().label == 0);
  p.class_weights = {1.0, 20.0};
  const auto t = tree::induce(x, y, 2, p);
  CHECK(t.root().label == 1);
  CHECK(t.root().confidence == doctest::Approx(tree::leaf_confidence(1, 10)));
}

TEST_CASE("winnowing removes uninformative features only") {
  const auto ds = data::gen_xor(400, 5, 3);
  Matrix x(ds.size(), 2);
  for (std::size_t r = 0; r < ds.size(); ++r) {
    x(r, 0) = ds.features(r, 2);
    x(r, 1) = ds.labels[r] + 0.01 * ds.features(r, 3);
  }
  tree::TreeParams p = mu(2);
  const auto t = tree::induce(x, ds.labels, 2, p);
  for (const auto& node : t.nodes())
    if (!node.is_leaf) CHECK(node.feature == 1);
}
