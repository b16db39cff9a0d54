#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "peaktopo/errors.hpp"
#include "peaktopo/kdtree.hpp"
#include "peaktopo/neighbors.hpp"
#include "peaktopo/neighbors_io.hpp"

using namespace peaktopo;

namespace {

PointSet make_points(std::size_t dim, const std::vector<double>& flat) {
  PointSet p(flat.size() / dim, dim);
  p.coords = flat;
  return p;
}

PointSet random_points(std::size_t n, std::size_t dim, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointSet p(n, dim);
  for (auto& x : p.coords) x = u(rng);
  return p;
}

// All-pairs sort of (distance, id), independent of the library graph code.
std::vector<std::vector<std::pair<double, PointId>>> sort_oracle(
    std::size_t n, std::size_t k, const auto& dist) {
  std::vector<std::vector<std::pair<double, PointId>>> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<double, PointId>> row;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row.emplace_back(dist(i, j), static_cast<PointId>(j));
    std::sort(row.begin(), row.end());
    row.resize(k);
    out[i] = std::move(row);
  }
  return out;
}

void check_against(const NeighborGraph& g,
                   const std::vector<std::vector<std::pair<double, PointId>>>& oracle) {
  for (std::size_t i = 0; i < g.n_points(); ++i)
    for (std::size_t l = 0; l < g.k_max(); ++l) {
      REQUIRE(g.ids(i)[l] == oracle[i][l].second);
      REQUIRE(g.dists(i)[l] == oracle[i][l].first);
    }
}

}  // namespace

TEST_CASE("points on a line") {
  const auto g = build_neighbor_graph(make_points(1, {0, 1, 3}), 2, Metric::kEuclidean);
  CHECK(g.ids(0)[0] == 1);
  CHECK(g.ids(0)[1] == 2);
  CHECK(g.dists(0)[0] == 1.0);
  CHECK(g.dists(0)[1] == 3.0);
  CHECK(g.neighbor(0, 2) == 2);
  CHECK(g.radius(0, 2) == 3.0);
  CHECK(g.metric_tag() == "euclidean");
}

TEST_CASE("coincident points list each other at zero distance") {
  const auto g = build_neighbor_graph(make_points(1, {0, 0, 1}), 2, Metric::kEuclidean);
  CHECK(g.ids(0)[0] == 1);
  CHECK(g.dists(0)[0] == 0.0);
  CHECK(g.ids(1)[0] == 0);
  CHECK(g.dists(1)[0] == 0.0);
  CHECK(g.ids(2)[0] == 0);
  CHECK(g.ids(2)[1] == 1);
}

TEST_CASE("kd-tree graph equals brute-force sort") {
  for (auto metric : {Metric::kEuclidean, Metric::kManhattan}) {
    const auto p = random_points(1000, 2, 11);
    const auto g = build_neighbor_graph(p, 50, metric);
    const auto oracle = sort_oracle(p.n_points, 50, [&](std::size_t i, std::size_t j) {
      return distance(p.row(i), p.row(j), metric);
    });
    check_against(g, oracle);
    CHECK(g == build_neighbor_graph_brute_force(p, 50, metric));
  }
}

TEST_CASE("kd-tree on a lattice with many exact ties") {
  PointSet p(400, 2);
  for (std::size_t i = 0; i < 400; ++i) {
    p.row(i)[0] = static_cast<double>(i % 20);
    p.row(i)[1] = static_cast<double>(i / 20);
  }
  for (auto metric : {Metric::kEuclidean, Metric::kManhattan}) {
    const auto g = build_neighbor_graph(p, 30, metric);
    CHECK(g == build_neighbor_graph_brute_force(p, 30, metric));
  }
}

TEST_CASE("higher dimension and duplicates match brute force") {
  auto p = random_points(600, 5, 3);
  for (std::size_t i = 0; i < 50; ++i)
    std::copy(p.row(i).begin(), p.row(i).end(), p.row(i + 300).begin());
  CHECK(build_neighbor_graph(p, 40, Metric::kEuclidean) ==
        build_neighbor_graph_brute_force(p, 40, Metric::kEuclidean));
}

TEST_CASE("graph construction is deterministic") {
  const auto p = random_points(500, 3, 5);
  CHECK(build_neighbor_graph(p, 20, Metric::kEuclidean) ==
        build_neighbor_graph(p, 20, Metric::kEuclidean));
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(build_neighbor_graph(make_points(1, {0, 1, 3}), 3, Metric::kEuclidean),
                  ConfigError);
  auto p = make_points(2, {0, 0, 1, 1, 2, NAN});
  try {
    build_neighbor_graph(p, 1, Metric::kEuclidean);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("row 2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_metric("cosine"), ConfigError);
  CHECK(default_k_max(10) == 9);
  CHECK(default_k_max(100000) == 512);
}

TEST_CASE("distance matrix ingestion") {
  DistanceMatrix m(3, {0, 1, 2, 1, 0, 5, 2, 5, 0});
  const auto g = ingest_distance_matrix(m, 2);
  CHECK(g.ids(0)[0] == 1);
  CHECK(g.ids(0)[1] == 2);
  CHECK(g.ids(1)[0] == 0);
  CHECK(g.ids(1)[1] == 2);

  DistanceMatrix flat(4, {0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0, 1, 1, 1, 1, 0});
  const auto gf = ingest_distance_matrix(flat, 3);
  CHECK(std::vector<PointId>(gf.ids(2).begin(), gf.ids(2).end()) == std::vector<PointId>{0, 1, 3});
  CHECK(std::vector<PointId>(gf.ids(0).begin(), gf.ids(0).end()) == std::vector<PointId>{1, 2, 3});
}

TEST_CASE("random symmetric matrix equals per-row sort") {
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<int> u(0, 20);
  const std::size_t n = 50;
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) v[i * n + j] = v[j * n + i] = 0.5 * u(rng);
  DistanceMatrix m(n, v);
  const auto g = ingest_distance_matrix(m, 20);
  check_against(g, sort_oracle(n, 20, [&](std::size_t i, std::size_t j) { return m(i, j); }));
}

TEST_CASE("matrix validation names the worst pair") {
  DistanceMatrix m(3, {0, 1, 2, 1, 0, 5, 2, 5.1, 0});
  try {
    ingest_distance_matrix(m, 2);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("asymmetric") != std::string::npos);
    CHECK(msg.find("d(1,2)") != std::string::npos);
  }
  CHECK_THROWS_AS(ingest_distance_matrix(DistanceMatrix(2, {0, -1, -1, 0}), 1), DataError);
  CHECK_NOTHROW(ingest_distance_matrix(DistanceMatrix(2, {0, 1, 1 + 1e-12, 0}), 1));
}

TEST_CASE("kNN file round trip") {
  const auto p = random_points(200, 2, 4);
  const auto g = build_neighbor_graph(p, 15, Metric::kManhattan);
  std::stringstream s;
  write_knn_tsv(s, g);
  const auto back = read_knn_tsv(s);
  CHECK(back == g);
}

TEST_CASE("kNN file rejects bad rows") {
  std::istringstream decreasing("0\t1\t1.0\n0\t2\t0.5\n1\t0\t1.0\n1\t2\t2.0\n2\t0\t0.5\n2\t1\t2.0\n");
  try {
    read_knn_tsv(decreasing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  std::istringstream missing("0\t1\t1.0\n0\t2\n");
  try {
    read_knn_tsv(missing);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find(":2:") != std::string::npos);
  }
  std::istringstream empty("");
  CHECK_THROWS_AS(read_knn_tsv(empty), DataError);
}

TEST_CASE("coordinate file parsing") {
  std::istringstream in("# x y\n0 0\n1\t2\n");
  const auto p = read_points_tsv(in);
  CHECK(p.n_points == 2);
  CHECK(p.dim == 2);
  CHECK(p.row(1)[1] == 2.0);
  std::istringstream ragged("0 0\n1\n");
  CHECK_THROWS_AS(read_points_tsv(ragged), DataError);
  std::istringstream text("0 0\n1 abc\n");
  CHECK_THROWS_AS(read_points_tsv(text), DataError);

  const auto q = random_points(30, 3, 8);
  std::stringstream s;
  write_points_tsv(s, q);
  CHECK(read_points_tsv(s).coords == q.coords);
}

TEST_CASE("distance oracle") {
  const auto p = make_points(2, {0, 0, 3, 4});
  DistanceOracle eu(p, Metric::kEuclidean);
  DistanceOracle l1(p, Metric::kManhattan);
  CHECK(eu(0, 1) == 5.0);
  CHECK(l1(0, 1) == 7.0);
  DistanceMatrix m(2, {0, 2, 2, 0});
  CHECK(DistanceOracle(m)(1, 0) == 2.0);
}
