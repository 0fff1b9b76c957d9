#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "rockgraph/errors.hpp"
#include "rockgraph/random.hpp"
#include "rockgraph/randomforest.hpp"

using namespace rockgraph;

namespace {

Dataset toy_rows(std::size_t rows, std::size_t features, std::uint64_t seed) {
  Rng rng(seed);
  Dataset d{features, {}, {}};
  for (std::size_t i = 0; i < rows; ++i) {
    double a = 0;
    for (std::size_t f = 0; f < features; ++f) {
      const double v = std::floor(uniform(rng, 0, 20));
      d.x.push_back(v);
      a += (f + 1) * v;
    }
    d.y.push_back({a + uniform(rng, -1, 1), -a + uniform(rng, -1, 1)});
  }
  return d;
}

double sse(const Dataset& d, const std::vector<std::size_t>& rows) {
  Target m{};
  for (auto r : rows)
    for (std::size_t t = 0; t < 2; ++t) m[t] += d.y[r][t] / rows.size();
  double s = 0;
  for (auto r : rows)
    for (std::size_t t = 0; t < 2; ++t) s += (d.y[r][t] - m[t]) * (d.y[r][t] - m[t]);
  return s;
}

TreeParams no_bootstrap(std::size_t depth, std::size_t min_leaf) {
  TreeParams p;
  p.max_depth = depth;
  p.min_leaf = min_leaf;
  p.bootstrap = false;
  return p;
}

}  // namespace

TEST_CASE("tree stopping rules") {
  Dataset constant{1, {1, 2, 3, 4}, {{7, 8}, {7, 8}, {7, 8}, {7, 8}}};
  const auto t = train_tree(constant, no_bootstrap(12, 1), 0);
  REQUIRE(t.nodes.size() == 1);
  CHECK(t.nodes[0].value == Target{7, 8});

  const auto d = toy_rows(10, 3, 1);
  const auto whole = train_tree(d, no_bootstrap(12, 10), 0);
  REQUIRE(whole.nodes.size() == 1);
  CHECK(whole.nodes[0].value[0] == doctest::Approx(std::accumulate(d.y.begin(), d.y.end(), 0.0,
                                                                   [](double s, const Target& y) { return s + y[0]; }) /
                                                   10));
  CHECK(train_tree(toy_rows(200, 3, 2), no_bootstrap(4, 1), 0).depth() <= 4);
  CHECK_THROWS_AS(train_tree(Dataset{3, {}, {}}, {}, 0), InvalidArgument);
}

TEST_CASE("separable toy splits between the classes") {
  Dataset d{1, {}, {}};
  for (int v : {1, 2, 3, 4, 7, 8, 9}) {
    d.x.push_back(v);
    d.y.push_back(v < 5 ? Target{0, 0} : Target{10, 10});
  }
  const auto t = train_tree(d, no_bootstrap(1, 1), 0);
  REQUIRE(t.nodes.size() == 3);
  CHECK(t.nodes[0].feature == 0);
  CHECK(t.nodes[0].threshold > 4);
  CHECK(t.nodes[0].threshold < 7);
  CHECK(t.nodes[t.nodes[0].left].value == Target{0, 0});
  CHECK(t.nodes[t.nodes[0].right].value == Target{10, 10});
}

TEST_CASE("root split matches an exhaustive scan") {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto d = toy_rows(25, 4, seed + 10);
    const auto t = train_tree(d, no_bootstrap(1, 2), 0);
    std::vector<std::size_t> all(d.rows());
    std::iota(all.begin(), all.end(), 0);
    const double parent = sse(d, all);
    double best = 0;
    for (std::size_t f = 0; f < d.n_features; ++f) {
      std::vector<double> vals;
      for (auto r : all) vals.push_back(d.row(r)[f]);
      std::sort(vals.begin(), vals.end());
      vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        const double thr = (vals[i] + vals[i + 1]) / 2;
        std::vector<std::size_t> l, r;
        for (auto row : all) (d.row(row)[f] < thr ? l : r).push_back(row);
        if (l.size() < 2 || r.size() < 2) continue;
        best = std::max(best, parent - sse(d, l) - sse(d, r));
      }
    }
    REQUIRE(t.nodes.size() == 3);
    std::vector<std::size_t> l, r;
    for (auto row : all) (d.row(row)[t.nodes[0].feature] < t.nodes[0].threshold ? l : r).push_back(row);
    CHECK(parent - sse(d, l) - sse(d, r) == doctest::Approx(best).epsilon(1e-9));
  }
}

TEST_CASE("memorization without bootstrap") {
  const auto d = toy_rows(60, 3, 4);
  ForestParams p;
  p.n_trees = 1;
  p.tree = no_bootstrap(TreeParams::kUnlimitedDepth, 1);
  // Duplicate feature rows with different labels cannot be separated; drop them.
  Dataset u{3, {}, {}};
  for (std::size_t i = 0; i < d.rows(); ++i) {
    bool dup = false;
    for (std::size_t j = 0; j < u.rows(); ++j) dup |= std::equal(d.row(i).begin(), d.row(i).end(), u.row(j).begin());
    if (dup) continue;
    u.x.insert(u.x.end(), d.row(i).begin(), d.row(i).end());
    u.y.push_back(d.y[i]);
  }
  const auto f = Forest::train(u, p);
  for (std::size_t i = 0; i < u.rows(); ++i) CHECK(f.predict(u.row(i)) == u.y[i]);
}

TEST_CASE("forest prediction and importance") {
  SUBCASE("mean of tree outputs") {
    RegressionTree a{{TreeNode{}}, {0.0}}, b{{TreeNode{}}, {0.0}};
    a.nodes[0].value = {10, 10};
    b.nodes[0].value = {20, 20};
    const auto f = Forest::from_trees({a, b}, 1);
    const std::vector<double> x{0.0};
    CHECK(f.predict(x) == Target{15, 15});
    const auto same = Forest::from_trees({a, a, a}, 1);
    CHECK(same.predict(x) == a.predict(x));
  }
  SUBCASE("single informative feature") {
    Rng rng(6);
    Dataset d{12, {}, {}};
    for (int i = 0; i < 300; ++i) {
      for (int f = 0; f < 12; ++f) d.x.push_back(uniform01(rng));
      const double v = d.x[d.x.size() - 12];
      d.y.push_back({std::sin(6 * v), v * v});
    }
    ForestParams p;
    p.n_trees = 10;
    p.seed = 2;
    const auto f = Forest::train(d, p);
    const auto imp = f.feature_importance();
    CHECK(imp[0] > 0.9);
    CHECK(std::abs(std::accumulate(imp.begin(), imp.end(), 0.0) - 1.0) < 1e-9);
    for (double v : imp) CHECK(v >= 0.0);
  }
  SUBCASE("one split on feature 3") {
    Dataset d{5, {}, {}};
    for (int i = 0; i < 8; ++i) {
      for (int f = 0; f < 5; ++f) d.x.push_back(f == 3 ? i : 1.0);
      d.y.push_back(i < 4 ? Target{0, 1} : Target{5, 6});
    }
    ForestParams p;
    p.n_trees = 1;
    p.tree = no_bootstrap(1, 1);
    const auto imp = Forest::train(d, p).feature_importance();
    CHECK(imp == std::vector<double>{0, 0, 0, 1, 0});
  }
  SUBCASE("predictions stay within the label range") {
    const auto d = toy_rows(80, 4, 12);
    ForestParams p;
    p.n_trees = 8;
    const auto f = Forest::train(d, p);
    double lo = 1e300, hi = -1e300;
    for (const auto& y : d.y) lo = std::min(lo, y[0]), hi = std::max(hi, y[0]);
    Rng rng(1);
    for (int i = 0; i < 100; ++i) {
      std::vector<double> x(4);
      for (auto& v : x) v = uniform(rng, -50, 50);
      const auto y = f.predict(x);
      CHECK(y[0] >= lo);
      CHECK(y[0] <= hi);
    }
  }
  SUBCASE("untrained and malformed use") {
    Forest f;
    CHECK_THROWS_AS(f.predict(std::vector<double>(12)), StateError);
    CHECK_THROWS_AS(f.feature_importance(), StateError);
    ForestParams p;
    p.n_trees = 0;
    CHECK_THROWS_AS(Forest::train(toy_rows(10, 2, 1), p), InvalidArgument);
  }
}

TEST_CASE("more trees do not increase ensemble variance") {
  const auto d = toy_rows(60, 3, 21);
  const std::vector<double> probe{10, 10, 10};
  auto spread = [&](std::size_t trees) {
    double s = 0, s2 = 0;
    const int reps = 24;
    for (int r = 0; r < reps; ++r) {
      ForestParams p;
      p.n_trees = trees;
      p.seed = 1000 + r;
      const double v = Forest::train(d, p).predict(probe)[0];
      s += v;
      s2 += v * v;
    }
    return s2 / reps - (s / reps) * (s / reps);
  };
  CHECK(spread(20) <= spread(1));
}

TEST_CASE("forest determinism and serialization") {
  const auto d = toy_rows(50, 12, 9);
  ForestParams p;
  p.n_trees = 5;
  p.seed = 77;
  const auto a = Forest::train(d, p);
  const auto b = Forest::train(d, p);
  CHECK(a == b);
  const auto back = Forest::parse(a.serialize());
  CHECK(back == a);
  for (std::size_t i = 0; i < d.rows(); ++i) CHECK(back.predict(d.row(i)) == a.predict(d.row(i)));
  CHECK_THROWS_AS(Forest::parse("{\"format\":\"other\"}"), FormatError);
  CHECK_THROWS_AS(Forest::parse("not json"), FormatError);
}
