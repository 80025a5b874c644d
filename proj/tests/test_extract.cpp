#include <algorithm>
#include <set>

#include "doctest.h"
#include "eclaire/data.hpp"
#include "eclaire/error.hpp"
#include "eclaire/eval.hpp"
#include "eclaire/extract.hpp"
#include "fixtures.hpp"

using namespace eclaire;
using extract::ExtractionConfig;
using fixtures::gt;
using mlp::Activation;
using mlp::DenseLayer;
using rules::Rule;

namespace {

tree::TreeParams params(std::size_t mu = 2) {
  tree::TreeParams p;
  p.min_samples_split = mu;
  return p;
}

ExtractionConfig config(std::size_t mu, std::size_t threads = 1) {
  ExtractionConfig c;
  c.min_samples = mu;
  c.n_threads = threads;
  return c;
}

// Always predicts class 0; every hidden unit is constant.
mlp::Mlp constant_net(std::size_t in, std::size_t hidden_layers) {
  std::vector<DenseLayer> layers;
  std::size_t width = in;
  for (std::size_t i = 0; i < hidden_layers; ++i) {
    layers.push_back(DenseLayer{Matrix(3, width), {0, 0, 0}, Activation::kTanh});
    width = 3;
  }
  layers.push_back(DenseLayer{Matrix(2, width), {1, 0}, Activation::kSoftmax});
  return mlp::Mlp(std::move(layers));
}

using RuleKey = std::pair<rules::Premise, Label>;

std::set<RuleKey> keys(const rules::RuleSet& rs) {
  std::set<RuleKey> out;
  for (const auto& r : rs.rules()) out.insert({r.premise, r.conclusion});
  return out;
}

bool subset_of(const std::set<RuleKey>& a, const std::set<RuleKey>& b) {
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

}  // namespace

TEST_CASE("substitute_clause") {
  const auto x = fixtures::random_matrix(200, 3, 1);
  const Rule rule{{gt(0, 0.0)}, 1, 0.8};
  SUBCASE("premise true everywhere gives one empty-premise rule") {
    const auto out = extract::substitute_clause(rule, x, Labels(200, 1), params());
    REQUIRE(out.size() == 1);
    CHECK(out[0].premise.empty());
    CHECK(out[0].conclusion == 1);
    CHECK(out[0].confidence == doctest::Approx(0.8 * 201.0 / 202.0));
  }
  SUBCASE("premise true nowhere drops the rule") {
    CHECK(extract::substitute_clause(rule, x, Labels(200, 0), params()).empty());
  }
  SUBCASE("monotone hidden unit maps back to a threshold on the input") {
    Matrix h(200, 1);
    for (std::size_t r = 0; r < 200; ++r) h(r, 0) = std::tanh(3.0 * x(r, 0) - 1.2);
    const rules::Premise hidden{gt(0, 0.2)};
    const auto truth = fixtures::truth_of(hidden, h);
    const auto out = extract::substitute_clause(Rule{hidden, 0, 1.0}, x, truth, params());
    REQUIRE(!out.empty());
    std::size_t agree = 0;
    for (std::size_t r = 0; r < 200; ++r) {
      bool any = false;
      for (const auto& s : out) any |= rules::eval_premise(s.premise, x.row(r));
      agree += any == static_cast<bool>(truth[r]);
    }
    CHECK(agree >= 190);
    for (const auto& s : out)
      for (const auto& t : s.premise) CHECK(t.feature == 0);
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(extract::substitute_clause(rule, x, Labels(10, 1), params()), DataError);
  }
}

TEST_CASE("clause-wise substitution adds, term-wise multiplies") {
  const auto f = fixtures::band_fixture();
  const rules::Term a = gt(0, 0.5), b = gt(1, 0.5), aux = gt(2, 0.5);
  const Rule r1{{a, aux}, 1, 1.0};
  const Rule r2{{b, aux}, 1, 1.0};

  const auto s1 = extract::substitute_clause(r1, f.x, fixtures::truth_of(r1.premise, f.h), params());
  const auto s2 = extract::substitute_clause(r2, f.x, fixtures::truth_of(r2.premise, f.h), params());
  CHECK(s1.size() == 3);
  CHECK(s2.size() == 4);
  CHECK(s1.size() + s2.size() == 7);

  const auto product = extract::substitute_terms(Rule{{a, b}, 1, 1.0}, f.x, f.h, params());
  CHECK(product.size() == 12);
  // Each product rule is a rectangle: one band of x1 crossed with one of x2.
  std::set<rules::Premise> distinct;
  for (const auto& r : product) distinct.insert(*rules::canonical_premise(r.premise));
  CHECK(distinct.size() == 12);

  SUBCASE("single-term rules reduce to the additive count") {
    const auto ta = extract::substitute_terms(Rule{{a}, 1, 1.0}, f.x, f.h, params());
    const auto tb = extract::substitute_terms(Rule{{b}, 1, 1.0}, f.x, f.h, params());
    CHECK(ta.size() + tb.size() == 7);
  }
  SUBCASE("three by three gives nine against six") {
    Matrix h = f.h;
    for (std::size_t r = 0; r < h.rows(); ++r) h(r, 1) = fixtures::bands(f.x(r, 1), 3);
    const auto c1 = extract::substitute_clause(r1, f.x, fixtures::truth_of(r1.premise, h), params());
    const auto c2 = extract::substitute_clause(r2, f.x, fixtures::truth_of(r2.premise, h), params());
    CHECK(c1.size() + c2.size() == 6);
    CHECK(extract::substitute_terms(Rule{{a, b}, 1, 1.0}, f.x, h, params()).size() == 9);
  }
  SUBCASE("cap aborts with a structured error") {
    try {
      extract::substitute_terms(Rule{{a, b}, 1, 1.0}, f.x, f.h, params(), 10);
      FAIL("expected ExplosionError");
    } catch (const ExplosionError& e) {
      CHECK(e.count() == 12);
      CHECK(e.cap() == 10);
    }
  }
}

TEST_CASE("constant network yields one default-equivalent rule per layer") {
  const auto net = constant_net(4, 3);
  const auto x = fixtures::random_matrix(100, 4, 2);
  const auto res = extract::eclaire_detailed(net, x, config(2));
  CHECK(res.pre_dedup_rules == 3);
  REQUIRE(res.rules.size() == 1);
  CHECK(res.rules.rules()[0].premise.empty());
  CHECK(res.rules.rules()[0].conclusion == 0);
  for (const auto& layer : res.layers) {
    CHECK(layer.intermediate_rules == 1);
    CHECK(layer.substituted_rules == 1);
  }
}

TEST_CASE("ECLAIRE additive law per layer") {
  const auto net = fixtures::random_net(4, {6, 5}, 2, 3);
  const auto x = fixtures::random_matrix(300, 4, 4, -1.0, 1.0);
  const auto cfg = config(5);
  const auto res = extract::eclaire_detailed(net, x, cfg);
  const auto predicted = net.predict_labels(x);
  const auto acts = net.all_activations(x);
  std::size_t total = 0;
  for (const auto& trace : res.layers) {
    const auto t = tree::induce(acts[trace.layer], predicted, 2, params(5));
    const auto inter = tree::to_ruleset(t, data::majority_label(predicted, 2));
    CHECK(trace.intermediate_rules == inter.size());
    std::size_t expected = 0;
    for (const auto& r : inter.rules())
      expected += extract::substitute_clause(r, x, fixtures::truth_of(r.premise, acts[trace.layer]), params(5)).size();
    CHECK(trace.substituted_rules == expected);
    total += expected;
  }
  CHECK(res.pre_dedup_rules == total);
}

TEST_CASE("ECLAIRE is invariant to the thread count") {
  const auto net = fixtures::random_net(5, {8, 6, 4}, 3, 11);
  const auto x = fixtures::random_matrix(400, 5, 12, -1.0, 1.0);
  const auto one = rules::to_json(extract::eclaire(net, x, config(3, 1)));
  CHECK(rules::to_json(extract::eclaire(net, x, config(3, 2))) == one);
  CHECK(rules::to_json(extract::eclaire(net, x, config(3, 6))) == one);
  CHECK(rules::to_json(extract::eclaire(net, x, config(3, 1))) == one);
}

TEST_CASE("layers contribute independently") {
  const auto net = fixtures::random_net(4, {6, 5, 4}, 2, 21);
  const auto x = fixtures::random_matrix(300, 4, 22, -1.0, 1.0);
  auto all = config(4);
  auto strided = all;
  strided.layer_stride = 2;
  auto with_input = all;
  with_input.include_input_layer = true;

  const auto r_all = extract::eclaire_detailed(net, x, all);
  const auto r_strided = extract::eclaire_detailed(net, x, strided);
  const auto r_input = extract::eclaire_detailed(net, x, with_input);

  CHECK(extract::selected_layers(3, strided) == std::vector<std::size_t>{1, 3});
  CHECK(extract::selected_layers(3, with_input) == std::vector<std::size_t>{0, 1, 2, 3});
  CHECK(subset_of(keys(r_strided.rules), keys(r_all.rules)));
  CHECK(subset_of(keys(r_all.rules), keys(r_input.rules)));
  auto trace_of = [](const extract::ExtractionResult& r, std::size_t layer) {
    for (const auto& t : r.layers)
      if (t.layer == layer) return t.substituted_rules;
    return std::size_t{0};
  };
  CHECK(trace_of(r_strided, 1) == trace_of(r_all, 1));
  CHECK(trace_of(r_strided, 3) == trace_of(r_all, 3));
  CHECK(trace_of(r_input, 2) == trace_of(r_all, 2));
}

TEST_CASE("every extracted rule fires on some training sample") {
  const auto ds = data::gen_xor(400, 4, 5);
  mlp::TrainConfig tc;
  tc.epochs = 40;
  const auto net = mlp::train(ds, std::vector<std::size_t>{16, 8}, Activation::kTanh, tc);
  const auto rs = extract::eclaire(net, ds.features, config(2));
  CHECK(rs.size() > 1);
  for (const auto& r : rs.rules()) {
    bool fired = false;
    for (std::size_t s = 0; s < ds.size() && !fired; ++s)
      fired = rules::eval_premise(r.premise, ds.features.row(s));
    CHECK(fired);
  }
}

TEST_CASE("coping options") {
  const auto net = fixtures::random_net(4, {8, 6}, 2, 31);
  const auto x = fixtures::random_matrix(400, 4, 32, -1.0, 1.0);
  SUBCASE("rule dropping removes the low-confidence intermediate rules") {
    const auto base = extract::eclaire_detailed(net, x, config(2));
    auto cfg = config(2);
    cfg.rule_drop_pct = 25;
    const auto dropped = extract::eclaire_detailed(net, x, cfg);
    for (std::size_t i = 0; i < base.layers.size(); ++i) {
      const std::size_t n = base.layers[i].intermediate_rules;
      CHECK(dropped.layers[i].intermediate_rules == n - n * 25 / 100);
    }
  }
  SUBCASE("subsampling is seeded") {
    auto cfg = config(2);
    cfg.sample_fraction = 0.5;
    cfg.seed = 3;
    CHECK(extract::eclaire(net, x, cfg) == extract::eclaire(net, x, cfg));
  }
  SUBCASE("class weighting is accepted") {
    auto cfg = config(2);
    cfg.class_weighted = true;
    CHECK_NOTHROW(extract::eclaire(net, x, cfg));
  }
  SUBCASE("hidden-activation substitution yields rules over hidden units") {
    auto cfg = config(2);
    cfg.substitution_source = extract::SubstitutionSource::kHidden;
    for (const auto& r : extract::eclaire(net, x, cfg).rules())
      for (const auto& t : r.premise) CHECK(t.feature < 8);
  }
}

TEST_CASE("configuration errors") {
  const auto net = fixtures::random_net(3, {4}, 2, 1);
  const auto x = fixtures::random_matrix(50, 3, 1);
  CHECK_THROWS_AS(extract::eclaire(net, x, config(1)), ConfigError);
  CHECK_THROWS_AS(extract::eclaire(net, x, config(2, 0)), ConfigError);
  auto bad = config(2);
  bad.sample_fraction = 0;
  CHECK_THROWS_AS(extract::eclaire(net, x, bad), ConfigError);
  bad = config(2);
  bad.layer_stride = 0;
  CHECK_THROWS_AS(extract::eclaire(net, x, bad), ConfigError);
  CHECK_THROWS_AS(extract::eclaire(net, fixtures::random_matrix(50, 2, 1), config(2)), DataError);
  CHECK_THROWS_AS(extract::method_from_string("rulex"), ConfigError);
  CHECK(extract::method_from_string("deepred_star") == extract::Method::kDeepredStar);
  CHECK_THROWS_AS(extract::run(extract::Method::kEclaire, nullptr, x, Labels(50, 0), 2, config(2)),
                  ConfigError);
}

TEST_CASE("term-wise baselines") {
  const auto net = fixtures::random_net(3, {4, 3}, 2, 41);
  const auto x = fixtures::random_matrix(300, 3, 42, -1.0, 1.0);
  const auto cfg = config(30);
  const auto remd = extract::remd_detailed(net, x, cfg);
  const auto deepred = extract::deepred_star_detailed(net, x, cfg);
  CHECK(keys(remd.rules) == keys(deepred.rules));
  CHECK(remd.rules.predict(x) == deepred.rules.predict(x));
  for (const auto& r : remd.rules.rules())
    for (const auto& t : r.premise) CHECK(t.feature < 3);

  SUBCASE("explosion guard") {
    auto tight = config(2);
    tight.max_rules = 5;
    const auto deep = fixtures::random_net(4, {8, 8, 8}, 2, 43);
    const auto xx = fixtures::random_matrix(400, 4, 44, -1.0, 1.0);
    CHECK_THROWS_AS(extract::remd(deep, xx, tight), ExplosionError);
    CHECK_THROWS_AS(extract::deepred_star(deep, xx, tight), ExplosionError);
  }
  SUBCASE("constant network gives a default-only rule set") {
    const auto rs = extract::deepred_star(constant_net(3, 2), x, config(2));
    CHECK(rules::rule_stats(rs).avg_rule_length == 0.0);
    CHECK(rs.predict(x) == Labels(300, 0));
  }
  SUBCASE("deepred holds more memory than remd") {
    const auto f = fixtures::band_fixture(40);
    const auto wide = fixtures::random_net(2, {4, 4}, 2, 61);
    const auto remd_use = eval::measure([&] { (void)extract::remd(wide, f.x, config(50)); });
    const auto deep_use = eval::measure([&] { (void)extract::deepred_star(wide, f.x, config(50)); });
    CHECK(deep_use.peak_bytes >= remd_use.peak_bytes);
  }
}

TEST_CASE("pedagogical and direct baselines") {
  SUBCASE("constant network gives a single default rule") {
    const auto x = fixtures::random_matrix(100, 3, 3);
    const auto rs = extract::pedc5(constant_net(3, 1), x, config(2));
    REQUIRE(rs.size() == 1);
    CHECK(rs.rules()[0].premise.empty());
    CHECK(rs.default_label() == 0);
  }
  SUBCASE("pedc5 equals c5 when the network predicts the labels") {
    const auto net = fixtures::random_net(3, {5}, 2, 51);
    const auto x = fixtures::random_matrix(300, 3, 52, -1.0, 1.0);
    const auto y = net.predict_labels(x);
    CHECK(extract::pedc5(net, x, config(4)) == extract::c5_direct(x, y, 2, config(4)));
  }
  SUBCASE("c5 solves separable blobs") {
    Rng rng(9);
    Matrix x(400, 2);
    Labels y(400);
    for (std::size_t i = 0; i < 400; ++i) {
      y[i] = static_cast<Label>(i % 2);
      x(i, 0) = (y[i] ? 2.0 : -2.0) + rng.uniform(-1.0, 1.0);
      x(i, 1) = rng.uniform(-1.0, 1.0);
    }
    CHECK(eval::accuracy(extract::c5_direct(x, y, 2, config(2)), x, y) >= 99.0);
  }
}
