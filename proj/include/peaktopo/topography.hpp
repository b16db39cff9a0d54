#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "peaktopo/clustering.hpp"

namespace peaktopo {

inline constexpr double kNoContact = std::numeric_limits<double>::infinity();

/// Square symmetric matrix of doubles.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), v_(n * n, fill) {}
  std::size_t size() const { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return v_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return v_[i * n_ + j]; }
  friend bool operator==(const SquareMatrix&, const SquareMatrix&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> v_;
};

struct ClusterSummary {
  ClusterId id = 0;
  PointId center = 0;
  double peak_log_rho = 0.0;
  double peak_err = 0.0;
  std::size_t population = 0;

  friend bool operator==(const ClusterSummary&, const ClusterSummary&) = default;
};

struct Topography {
  std::vector<ClusterSummary> clusters;
  std::vector<Saddle> saddles;  ///< ordered by (a, b)
  /// Diagonal: peak log-density. Off-diagonal: saddle log-density, NaN when
  /// the two peaks are not in contact.
  SquareMatrix saddle_matrix;
  /// d_cc' for contacting pairs, kNoContact otherwise, 0 on the diagonal.
  SquareMatrix distances;

  std::size_t n_clusters() const { return clusters.size(); }
};

bool operator==(const Saddle& x, const Saddle& y);
bool operator==(const Topography& x, const Topography& y);

Topography build_topography(const Clustering& clustering, const DensityEstimate& estimate);

/// d_cc' = F_cc' - min(F_c, F_c') with F = -log rho, for contacting pairs.
SquareMatrix cluster_distances(const std::vector<ClusterSummary>& clusters,
                               const std::vector<Saddle>& saddles);

/// 1.05 x the largest finite off-diagonal distance (1.0 if there is none).
double sentinel_height(const SquareMatrix& distances);

struct DendrogramNode {
  std::size_t id = 0;
  std::optional<std::size_t> left;   ///< absent for leaves
  std::optional<std::size_t> right;
  double height = 0.0;               ///< merge height, 0 for leaves
  bool sentinel = false;             ///< joins components with no contact
  std::size_t population = 0;
  std::size_t min_leaf = 0;          ///< smallest cluster id underneath
};

struct LeafLayout {
  ClusterId cluster = 0;
  double x = 0.0;              ///< center of the leaf's population interval
  double width = 0.0;          ///< proportional to population
  double branch_height = 0.0;  ///< proportional to the peak log-density
};

/// Nodes 0..n-1 are leaves (cluster ids); internal nodes follow in merge order.
struct Dendrogram {
  std::vector<DendrogramNode> nodes;
  std::size_t n_leaves = 0;
  std::size_t root = 0;
  double sentinel = 0.0;
  std::vector<ClusterId> leaf_order;
  std::vector<LeafLayout> layout;

  /// Heights of the internal nodes in merge order.
  std::vector<double> merge_heights() const;
};

/// Single-linkage agglomeration over `distances` (kNoContact entries joined
/// last at the sentinel height). `populations` and `peaks` only feed the layout
/// and may be empty.
Dendrogram single_linkage(const SquareMatrix& distances,
                          const std::vector<std::size_t>& populations = {},
                          const std::vector<double>& peaks = {});

std::string to_newick(const Dendrogram& dendrogram);
nlohmann::json dendrogram_layout_json(const Dendrogram& dendrogram);

/// Classical MDS of `distances` into 2-D. Non-contacting pairs are imputed
/// with the sentinel height. Requires at least 2 clusters.
std::vector<std::array<double, 2>> mds_layout(const SquareMatrix& distances);

struct NetworkNode {
  ClusterId id = 0;
  std::size_t population = 0;
  double peak_log_rho = 0.0;
  double suggested_area = 0.0;
  double width = 0.0;
  std::optional<std::array<double, 2>> position;
};

struct NetworkEdge {
  ClusterId a = 0;
  ClusterId b = 0;
  double weight = 0.0;  ///< saddle log-density
  double suggested_width = 0.0;
};

struct Network {
  std::vector<NetworkNode> nodes;
  std::vector<NetworkEdge> edges;
};

Network network_export(const Topography& topography);
std::string to_dot(const Network& network);

nlohmann::json to_json(const Topography& topography);
Topography topography_from_json(const nlohmann::json& doc);

}  // namespace peaktopo
