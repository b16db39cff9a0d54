#include "peaktopo/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"
#include "peaktopo/kdtree.hpp"

namespace peaktopo {

std::string_view to_string(Metric metric) {
  switch (metric) {
    case Metric::kEuclidean:
      return "euclidean";
    case Metric::kManhattan:
      return "manhattan";
  }
  return "unknown";
}

Metric parse_metric(std::string_view name) {
  if (name == "euclidean") return Metric::kEuclidean;
  if (name == "manhattan") return Metric::kManhattan;
  throw ConfigError(fmt::format("unknown metric '{}'", name));
}

void validate(const PointSet& points) {
  if (points.coords.size() != points.n_points * points.dim)
    throw DataError("coordinate buffer does not match n_points x dim");
  if (points.n_points < 2)
    throw DataError(fmt::format("need at least 2 points, got {}", points.n_points));
  if (points.dim == 0) throw DataError("points have zero coordinates");
  for (std::size_t i = 0; i < points.n_points; ++i) {
    for (double x : points.row(i)) {
      if (!std::isfinite(x)) throw DataError(fmt::format("non-finite coordinate in row {}", i));
    }
  }
}

DistanceMatrix::DistanceMatrix(std::size_t n, std::vector<double> values)
    : n_(n), values_(std::move(values)) {
  if (values_.size() != n_ * n_)
    throw DataError(fmt::format("distance matrix is not square: {} entries for n = {}",
                                values_.size(), n_));
}

void DistanceMatrix::validate(double tolerance) const {
  if (n_ < 2) throw DataError(fmt::format("need at least 2 points, got {}", n_));
  double worst = 0.0;
  std::size_t wi = 0, wj = 0;
  for (std::size_t i = 0; i < n_; ++i) {
    if ((*this)(i, i) != 0.0) throw DataError(fmt::format("non-zero diagonal at row {}", i));
    for (std::size_t j = 0; j < n_; ++j) {
      double v = (*this)(i, j);
      if (!std::isfinite(v)) throw DataError(fmt::format("non-finite entry at ({}, {})", i, j));
      if (v < 0.0) throw DataError(fmt::format("negative entry {} at ({}, {})", v, i, j));
      if (j > i) {
        double asym = std::abs(v - (*this)(j, i));
        if (asym > worst) {
          worst = asym;
          wi = i;
          wj = j;
        }
      }
    }
  }
  if (worst > tolerance)
    throw DataError(fmt::format("distance matrix asymmetric: |d({0},{1}) - d({1},{0})| = {2}",
                                wi, wj, worst));
}

double distance(std::span<const double> a, std::span<const double> b, Metric metric) {
  double acc = 0.0;
  if (metric == Metric::kManhattan) {
    for (std::size_t c = 0; c < a.size(); ++c) acc += std::abs(a[c] - b[c]);
    return acc;
  }
  for (std::size_t c = 0; c < a.size(); ++c) {
    double diff = a[c] - b[c];
    acc += diff * diff;
  }
  return std::sqrt(acc);
}

NeighborGraph::NeighborGraph(std::size_t n_points, std::size_t k_max, std::vector<PointId> ids,
                             std::vector<double> dists, std::string metric_tag)
    : n_points_(n_points),
      k_max_(k_max),
      ids_(std::move(ids)),
      dists_(std::move(dists)),
      metric_tag_(std::move(metric_tag)) {
  if (ids_.size() != n_points_ * k_max_ || dists_.size() != ids_.size())
    throw DataError("neighbor buffers do not match n_points x k_max");
  if (k_max_ == 0 || k_max_ >= n_points_)
    throw DataError(fmt::format("k_max = {} must be in [1, n_points - 1 = {}]", k_max_,
                                n_points_ == 0 ? 0 : n_points_ - 1));
  for (std::size_t i = 0; i < n_points_; ++i) {
    auto row_ids = this->ids(i);
    auto row_d = this->dists(i);
    for (std::size_t l = 0; l < k_max_; ++l) {
      if (row_ids[l] >= n_points_)
        throw DataError(fmt::format("point {}: neighbor id {} out of range", i, row_ids[l]));
      if (row_ids[l] == i) throw DataError(fmt::format("point {} lists itself as a neighbor", i));
      if (!std::isfinite(row_d[l]) || row_d[l] < 0.0)
        throw DataError(fmt::format("point {}: invalid distance {}", i, row_d[l]));
      if (l > 0) {
        if (row_d[l] < row_d[l - 1])
          throw DataError(fmt::format("point {}: distances decrease at neighbor {}", i, l + 1));
        if (row_d[l] == row_d[l - 1] && row_ids[l] <= row_ids[l - 1])
          throw DataError(
              fmt::format("point {}: tied neighbors not in ascending id order at {}", i, l + 1));
      }
    }
  }
}

std::size_t default_k_max(std::size_t n_points) {
  return n_points < 2 ? 0 : std::min(n_points - 1, kDefaultKMaxLimit);
}

namespace {

void check_k_max(std::size_t k_max, std::size_t n) {
  if (k_max == 0 || k_max >= n)
    throw ConfigError(fmt::format("k_max = {} must satisfy 1 <= k_max < n_points = {}", k_max, n));
}

}  // namespace

NeighborGraph build_neighbor_graph(const PointSet& points, std::size_t k_max, Metric metric) {
  validate(points);
  check_k_max(k_max, points.n_points);
  KdTree tree(points, metric);
  std::vector<PointId> ids(points.n_points * k_max);
  std::vector<double> dists(ids.size());
  for (std::size_t i = 0; i < points.n_points; ++i) {
    auto found = tree.nearest(static_cast<PointId>(i), k_max);
    for (std::size_t l = 0; l < k_max; ++l) {
      ids[i * k_max + l] = found[l].id;
      dists[i * k_max + l] = found[l].dist;
    }
  }
  return NeighborGraph(points.n_points, k_max, std::move(ids), std::move(dists),
                       std::string(to_string(metric)));
}

NeighborGraph build_neighbor_graph_brute_force(const PointSet& points, std::size_t k_max,
                                               Metric metric) {
  validate(points);
  check_k_max(k_max, points.n_points);
  const std::size_t n = points.n_points;
  std::vector<PointId> ids(n * k_max);
  std::vector<double> dists(ids.size());
  std::vector<Neighbor> row;
  row.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      row.push_back({distance(points.row(i), points.row(j), metric), static_cast<PointId>(j)});
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k_max), row.end());
    for (std::size_t l = 0; l < k_max; ++l) {
      ids[i * k_max + l] = row[l].id;
      dists[i * k_max + l] = row[l].dist;
    }
  }
  return NeighborGraph(n, k_max, std::move(ids), std::move(dists), std::string(to_string(metric)));
}

NeighborGraph ingest_distance_matrix(const DistanceMatrix& matrix, std::size_t k_max) {
  matrix.validate();
  const std::size_t n = matrix.size();
  check_k_max(k_max, n);
  std::vector<PointId> ids(n * k_max);
  std::vector<double> dists(ids.size());
  std::vector<Neighbor> row;
  row.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    row.clear();
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) row.push_back({matrix(i, j), static_cast<PointId>(j)});
    }
    std::partial_sort(row.begin(), row.begin() + static_cast<std::ptrdiff_t>(k_max), row.end());
    for (std::size_t l = 0; l < k_max; ++l) {
      ids[i * k_max + l] = row[l].id;
      dists[i * k_max + l] = row[l].dist;
    }
  }
  return NeighborGraph(n, k_max, std::move(ids), std::move(dists), "matrix");
}

std::size_t DistanceOracle::size() const {
  return std::visit(
      [](auto* src) -> std::size_t {
        if constexpr (std::is_same_v<decltype(src), const PointSet*>)
          return src->n_points;
        else
          return src->size();
      },
      source_);
}

double DistanceOracle::operator()(std::size_t i, std::size_t j) const {
  if (auto* pts = std::get_if<const PointSet*>(&source_))
    return distance((*pts)->row(i), (*pts)->row(j), metric_);
  return (*std::get<const DistanceMatrix*>(source_))(i, j);
}

}  // namespace peaktopo
