#pragma once

#include <cstddef>
#include <vector>

#include "peaktopo/neighbors.hpp"

namespace peaktopo {

struct Neighbor {
  double dist;
  PointId id;

  friend auto operator<=>(const Neighbor&, const Neighbor&) = default;
};

/// Static kd-tree for exact k-nearest-neighbor queries under the L1 or L2
/// metric. Holds a reference to the point set.
class KdTree {
 public:
  KdTree(const PointSet& points, Metric metric, std::size_t leaf_size = 16);

  /// The k nearest points to point `query`, excluding itself, ordered by
  /// (distance, id). Distances are computed with peaktopo::distance so the
  /// result matches an all-pairs scan bit for bit.
  std::vector<Neighbor> nearest(PointId query, std::size_t k) const;

 private:
  struct Node {
    std::size_t begin;
    std::size_t end;
    std::size_t left = 0;   // 0 means leaf
    std::size_t right = 0;
  };

  std::size_t build(std::size_t begin, std::size_t end, std::size_t depth);
  double box_lower_bound(std::size_t node, std::span<const double> q) const;

  const PointSet& points_;
  Metric metric_;
  std::size_t leaf_size_;
  std::vector<PointId> order_;
  std::vector<Node> nodes_;
  std::vector<double> box_lo_;  // per node, dim entries
  std::vector<double> box_hi_;
};

}  // namespace peaktopo
