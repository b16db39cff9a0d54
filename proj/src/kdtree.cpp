#include "peaktopo/kdtree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace peaktopo {

KdTree::KdTree(const PointSet& points, Metric metric, std::size_t leaf_size)
    : points_(points), metric_(metric), leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  order_.resize(points.n_points);
  std::iota(order_.begin(), order_.end(), PointId{0});
  nodes_.reserve(2 * points.n_points / leaf_size_ + 2);
  if (points.n_points > 0) build(0, points.n_points, 0);
}

std::size_t KdTree::build(std::size_t begin, std::size_t end, std::size_t depth) {
  const std::size_t dim = points_.dim;
  const std::size_t idx = nodes_.size();
  nodes_.push_back({begin, end});
  box_lo_.resize((idx + 1) * dim);
  box_hi_.resize((idx + 1) * dim);
  for (std::size_t c = 0; c < dim; ++c) {
    double lo = points_.row(order_[begin])[c];
    double hi = lo;
    for (std::size_t p = begin + 1; p < end; ++p) {
      double x = points_.row(order_[p])[c];
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
    box_lo_[idx * dim + c] = lo;
    box_hi_[idx * dim + c] = hi;
  }
  if (end - begin <= leaf_size_) return idx;

  std::size_t split_dim = 0;
  double widest = -1.0;
  for (std::size_t c = 0; c < dim; ++c) {
    double w = box_hi_[idx * dim + c] - box_lo_[idx * dim + c];
    if (w > widest) {
      widest = w;
      split_dim = c;
    }
  }
  if (widest <= 0.0) return idx;  // all coincident

  const std::size_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + static_cast<std::ptrdiff_t>(begin),
                   order_.begin() + static_cast<std::ptrdiff_t>(mid),
                   order_.begin() + static_cast<std::ptrdiff_t>(end),
                   [&](PointId a, PointId b) {
                     double xa = points_.row(a)[split_dim];
                     double xb = points_.row(b)[split_dim];
                     return xa < xb || (xa == xb && a < b);
                   });
  std::size_t left = build(begin, mid, depth + 1);
  std::size_t right = build(mid, end, depth + 1);
  nodes_[idx].left = left;
  nodes_[idx].right = right;
  return idx;
}

double KdTree::box_lower_bound(std::size_t node, std::span<const double> q) const {
  const std::size_t dim = points_.dim;
  double acc = 0.0;
  for (std::size_t c = 0; c < dim; ++c) {
    double lo = box_lo_[node * dim + c];
    double hi = box_hi_[node * dim + c];
    double gap = q[c] < lo ? lo - q[c] : (q[c] > hi ? q[c] - hi : 0.0);
    acc += metric_ == Metric::kManhattan ? gap : gap * gap;
  }
  return metric_ == Metric::kManhattan ? acc : std::sqrt(acc);
}

std::vector<Neighbor> KdTree::nearest(PointId query, std::size_t k) const {
  std::priority_queue<Neighbor> heap;  // max-heap: top is the current worst
  if (k == 0 || nodes_.empty()) return {};
  const auto q = points_.row(query);

  // Bounds are only used to skip work; the relative slack keeps rounding in
  // the box bound from pruning a point that ties the current worst.
  auto prunable = [&](double bound) {
    return heap.size() == k && bound > heap.top().dist * (1.0 + 1e-12);
  };

  std::vector<std::pair<std::size_t, double>> stack{{0, box_lower_bound(0, q)}};
  while (!stack.empty()) {
    auto [node, bound] = stack.back();
    stack.pop_back();
    if (prunable(bound)) continue;
    const Node& nd = nodes_[node];
    if (nd.left == 0) {
      for (std::size_t p = nd.begin; p < nd.end; ++p) {
        PointId id = order_[p];
        if (id == query) continue;
        Neighbor cand{distance(q, points_.row(id), metric_), id};
        if (heap.size() < k) {
          heap.push(cand);
        } else if (cand < heap.top()) {
          heap.pop();
          heap.push(cand);
        }
      }
      continue;
    }
    double bl = box_lower_bound(nd.left, q);
    double br = box_lower_bound(nd.right, q);
    // Push the farther child first so the nearer one is explored next.
    if (bl <= br) {
      stack.emplace_back(nd.right, br);
      stack.emplace_back(nd.left, bl);
    } else {
      stack.emplace_back(nd.left, bl);
      stack.emplace_back(nd.right, br);
    }
  }

  std::vector<Neighbor> out(heap.size());
  for (std::size_t l = out.size(); l-- > 0;) {
    out[l] = heap.top();
    heap.pop();
  }
  return out;
}

}  // namespace peaktopo
