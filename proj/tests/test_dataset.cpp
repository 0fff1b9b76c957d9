#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "doctest.h"
#include "rockgraph/dataset.hpp"
#include "rockgraph/errors.hpp"
#include "rockgraph/random.hpp"
#include "rockgraph/scoring.hpp"

using namespace rockgraph;
namespace fs = std::filesystem;

namespace {

std::vector<std::string> make_ids(std::size_t n) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < n; ++i) ids.push_back("id" + std::to_string(i));
  return ids;
}

fs::path temp_dir(const char* name) {
  auto p = fs::temp_directory_path() / "rockgraph_tests" / name;
  fs::create_directories(p);
  return p;
}

}  // namespace

TEST_CASE("split counts and determinism") {
  const auto ten = make_ids(10);
  const auto s = make_split(ten, {}, 7);
  CHECK(s.train.size() == 8);
  CHECK(s.val.size() == 1);
  CHECK(s.test.size() == 1);
  const auto again = make_split(ten, {}, 7);
  CHECK(s.train == again.train);
  CHECK(s.val == again.val);
  CHECK(s.test == again.test);

  const auto nine = make_split(make_ids(9), {}, 7);
  CHECK(nine.train.size() == 7);
  CHECK(nine.val.size() == 1);
  CHECK(nine.test.size() == 1);

  CHECK(make_split(make_ids(500), {}, 1).train.size() == 400);
  CHECK_THROWS_AS(make_split({}, {}, 1), InvalidArgument);
  CHECK_THROWS_AS(make_split(ten, {0.5, 0.1, 0.1}, 1), InvalidArgument);
}

TEST_CASE("split partitions the ids for any seed") {
  Rng rng(5);
  for (int t = 0; t < 50; ++t) {
    const auto ids = make_ids(1 + uniform_index(rng, 60));
    const auto s = make_split(ids, {}, rng());
    std::multiset<std::string> all(s.train.begin(), s.train.end());
    all.insert(s.val.begin(), s.val.end());
    all.insert(s.test.begin(), s.test.end());
    CHECK(all == std::multiset<std::string>(ids.begin(), ids.end()));
  }
}

TEST_CASE("split file round trip") {
  const auto dir = temp_dir("split");
  const auto s = make_split(make_ids(23), {}, 3);
  write_split(s, dir / "split.txt");
  const auto back = read_split(dir / "split.txt");
  CHECK(back.train == s.train);
  CHECK(back.val == s.val);
  CHECK(back.test == s.test);
  std::ofstream(dir / "bad.txt") << "id0\n[train]\n";
  CHECK_THROWS_AS(read_split(dir / "bad.txt"), FormatError);
}

TEST_CASE("manifest round trip") {
  const auto dir = temp_dir("manifest");
  std::vector<Sample> rows{{"a", "graphs/a.json", "voxels/a.raw", 32, 0.25, ElasticModuli{20.5, 30.25}},
                           {"b", "graphs/b.json", "", 48, 0.1, std::nullopt}};
  write_manifest(rows, dir / "m.csv");
  const auto back = read_manifest(dir / "m.csv");
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "a");
  CHECK(back[0].subcube_size == 32);
  CHECK(back[0].labels == rows[0].labels);
  CHECK_FALSE(back[1].labels.has_value());
  CHECK(back[1].voxel_path.empty());
  CHECK(resolve_path(dir / "m.csv", "graphs/a.json") == dir / "graphs/a.json");
  CHECK(resolve_path(dir / "m.csv", "/abs/x.json") == fs::path("/abs/x.json"));

  std::ofstream(dir / "bad.csv") << "id,graph\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad.csv"), FormatError);
  std::ofstream(dir / "bad2.csv") << "id,graph_path,voxel_path,subcube_size,porosity,k_gpa,mu_gpa\na,g,,32,1.5,,\n";
  CHECK_THROWS_AS(read_manifest(dir / "bad2.csv"), FormatError);
}

TEST_CASE("synthetic labels") {
  const DemParams p{{36.6, 45.0}};
  CHECK(synth_labels(0.2, p, 0.0, 1) == dem_moduli(p, 0.2));
  CHECK(synth_labels(0.0, p, 0.0, 1) == p.mineral);
  CHECK(synth_labels(0.2, p, 0.5, 9) == synth_labels(0.2, p, 0.5, 9));
  CHECK_FALSE(synth_labels(0.2, p, 0.5, 9) == synth_labels(0.2, p, 0.5, 10));
  const auto grid = VoxelGrid::filled({4, 4, 4}, 1.0, Phase::Solid);
  CHECK(synth_labels(grid, p, 0.0, 3) == p.mineral);
  CHECK_THROWS_AS(synth_labels(0.2, p, -1.0, 1), InvalidArgument);

  SUBCASE("noise has roughly the requested spread and is clamped") {
    double s = 0, s2 = 0;
    const int n = 4000;
    const auto base = dem_moduli(p, 0.2);
    for (int i = 0; i < n; ++i) {
      const double d = synth_labels(0.2, p, 0.5, i).k - base.k;
      s += d;
      s2 += d * d;
    }
    CHECK(std::abs(s / n) < 0.05);
    CHECK(std::sqrt(s2 / n) == doctest::Approx(0.5).epsilon(0.05));
    for (int i = 0; i < 50; ++i) CHECK(synth_labels(0.99, p, 50.0, i).k >= 0.0);
  }
}

TEST_CASE("standardizer") {
  const std::vector<std::vector<double>> rows{{1, 5, 2}, {3, 5, 4}, {5, 5, 9}};
  const auto s = Standardizer::fit(rows);
  CHECK(s.stddev()[1] == 1.0);
  std::array<double, 3> mean{}, var{};
  for (const auto& r : rows) {
    const auto z = s.apply(r);
    CHECK(z[1] == 0.0);
    for (int j = 0; j < 3; ++j) mean[j] += z[j] / 3;
  }
  for (const auto& r : rows) {
    const auto z = s.apply(r);
    for (int j = 0; j < 3; ++j) var[j] += (z[j] - mean[j]) * (z[j] - mean[j]) / 3;
    const auto back = s.inverse(z);
    for (int j = 0; j < 3; ++j) CHECK(std::abs(back[j] - r[j]) < 1e-12);
  }
  for (int j = 0; j < 3; ++j) CHECK(std::abs(mean[j]) < 1e-9);
  CHECK(var[0] == doctest::Approx(1.0));
  CHECK(var[2] == doctest::Approx(1.0));

  const std::vector<std::vector<double>> single{{4, -2, 7}};
  CHECK(Standardizer::fit(single).apply(single[0]) == std::vector<double>{0, 0, 0});

  const std::vector<double> other{10, 5, -3};
  const auto z = s.apply(other);
  CHECK(z[0] != 0.0);

  CHECK_THROWS_AS(Standardizer::fit({}), InvalidArgument);
  CHECK_THROWS_AS(s.apply(std::vector<double>{1, 2}), InvalidArgument);
  CHECK_THROWS_AS(Standardizer({0.0}, {0.0}), InvalidArgument);
}

TEST_CASE("scores") {
  const std::vector<double> t{1, 2, 3};
  CHECK(r2(t, t) == 1.0);
  CHECK(mse(t, t) == 0.0);
  CHECK(r2(std::vector<double>{2, 2, 2}, t) == 0.0);
  const std::vector<double> p{1, 2, 4};
  CHECK(mse(p, t) == doctest::Approx(1.0 / 3.0));
  CHECK(r2(p, t) == doctest::Approx(0.5));
  CHECK_THROWS_AS(r2(t, std::vector<double>{1, 1, 1}), InvalidArgument);
  CHECK_THROWS_AS(r2(t, std::vector<double>{1, 2}), InvalidArgument);
  CHECK_THROWS_AS(mse({}, {}), InvalidArgument);
  Rng rng(8);
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(5), b(5);
    for (auto& v : a) v = uniform(rng, -5, 5);
    for (auto& v : b) v = uniform(rng, -5, 5);
    CHECK(r2(a, b) <= 1.0);
    CHECK(mse(a, b) >= 0.0);
  }
}
