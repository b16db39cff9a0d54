#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace peaktopo {

using PointId = std::uint32_t;

enum class Metric { kEuclidean, kManhattan };

std::string_view to_string(Metric metric);
Metric parse_metric(std::string_view name);

/// Dense row-major coordinates, one row per point. Point ids are row indices.
struct PointSet {
  std::size_t n_points = 0;
  std::size_t dim = 0;
  std::vector<double> coords;

  PointSet() = default;
  PointSet(std::size_t n, std::size_t d) : n_points(n), dim(d), coords(n * d, 0.0) {}

  std::span<const double> row(std::size_t i) const { return {coords.data() + i * dim, dim}; }
  std::span<double> row(std::size_t i) { return {coords.data() + i * dim, dim}; }
};

/// Throws DataError naming the first row with a non-finite coordinate, or
/// when fewer than two points are present.
void validate(const PointSet& points);

/// Square matrix of precomputed pairwise distances.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  DistanceMatrix(std::size_t n, std::vector<double> values);

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return values_[i * n_ + j]; }
  std::span<const double> row(std::size_t i) const { return {values_.data() + i * n_, n_}; }

  /// Checks squareness, zero diagonal, non-negativity and symmetry within
  /// `tolerance`. The error message names the worst offending pair.
  void validate(double tolerance = 1e-9) const;

 private:
  std::size_t n_ = 0;
  std::vector<double> values_;
};

double distance(std::span<const double> a, std::span<const double> b, Metric metric);

/// Immutable per-point neighbor lists sorted by (distance, id).
class NeighborGraph {
 public:
  NeighborGraph() = default;

  /// Takes ownership of row-major `ids` / `dists` (n_points × k_max) and
  /// enforces the graph invariants, throwing DataError on violation.
  NeighborGraph(std::size_t n_points, std::size_t k_max, std::vector<PointId> ids,
                std::vector<double> dists, std::string metric_tag);

  std::size_t n_points() const { return n_points_; }
  std::size_t k_max() const { return k_max_; }
  const std::string& metric_tag() const { return metric_tag_; }

  std::span<const PointId> ids(std::size_t i) const { return {ids_.data() + i * k_max_, k_max_}; }
  std::span<const double> dists(std::size_t i) const {
    return {dists_.data() + i * k_max_, k_max_};
  }

  /// l-th neighbor of i, 1-based as in r_{i,l}.
  PointId neighbor(std::size_t i, std::size_t l) const { return ids_[i * k_max_ + l - 1]; }
  double radius(std::size_t i, std::size_t l) const { return dists_[i * k_max_ + l - 1]; }

  friend bool operator==(const NeighborGraph&, const NeighborGraph&) = default;

 private:
  std::size_t n_points_ = 0;
  std::size_t k_max_ = 0;
  std::vector<PointId> ids_;
  std::vector<double> dists_;
  std::string metric_tag_;
};

inline constexpr std::size_t kDefaultKMaxLimit = 512;

/// min(n - 1, 512)
std::size_t default_k_max(std::size_t n_points);

/// Exact kNN over coordinates, kd-tree backed. Ties are broken by ascending id.
NeighborGraph build_neighbor_graph(const PointSet& points, std::size_t k_max, Metric metric);

/// Reference all-pairs implementation of build_neighbor_graph.
NeighborGraph build_neighbor_graph_brute_force(const PointSet& points, std::size_t k_max,
                                               Metric metric);

NeighborGraph ingest_distance_matrix(const DistanceMatrix& matrix, std::size_t k_max);

/// Exact distance between arbitrary points, backed either by coordinates or
/// by a full distance matrix. Non-owning: the source must outlive the oracle.
class DistanceOracle {
 public:
  DistanceOracle(const PointSet& points, Metric metric) : source_(&points), metric_(metric) {}
  explicit DistanceOracle(const DistanceMatrix& matrix) : source_(&matrix) {}

  std::size_t size() const;
  double operator()(std::size_t i, std::size_t j) const;

 private:
  std::variant<const PointSet*, const DistanceMatrix*> source_;
  Metric metric_ = Metric::kEuclidean;
};

}  // namespace peaktopo
