#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <limits>
#include <map>
#include <span>
#include <utility>
#include <vector>

#include "peaktopo/density.hpp"
#include "peaktopo/neighbors.hpp"

namespace peaktopo {

using ClusterId = std::uint32_t;

inline constexpr PointId kNoParent = std::numeric_limits<PointId>::max();

/// Which saddle sets the halo threshold of a cluster.
enum class HaloRule {
  kHighest,       ///< highest saddle of the cluster
  kLowest,        ///< lowest saddle of the cluster
  kGlobalLowest,  ///< lowest saddle over all pairs
};

std::string_view to_string(HaloRule rule);
HaloRule parse_halo_rule(std::string_view name);

struct ClusterConfig {
  double z = 1.0;
  HaloRule halo_rule = HaloRule::kHighest;
  bool halo = true;

  void validate() const;
};

/// True when point a ranks strictly above point b: higher g, ties to the lower id.
inline bool ranks_above(std::span<const double> g, PointId a, PointId b) {
  return g[a] > g[b] || (g[a] == g[b] && a < b);
}

/// g_i = log_rho_i + err_i
std::vector<double> compute_g(const DensityEstimate& estimate);

struct DeltaParent {
  std::vector<double> delta;
  std::vector<PointId> parent;  ///< nearest higher-g point, kNoParent for the top
  PointId top = 0;              ///< point with the highest g
};

/// delta_i = distance to the nearest point with strictly higher g (ties by
/// id); the top point gets its distance to the farthest point. The neighbor
/// lists answer most queries, the oracle covers the rest.
DeltaParent compute_delta_parent(std::span<const double> g, const NeighborGraph& graph,
                                 const DistanceOracle& oracle);

/// Points with delta_i > r_khat_i that lie in no higher-g point's k_hat
/// neighborhood, ordered by decreasing g. The top point is always a center.
std::vector<PointId> detect_putative_centers(std::span<const double> g, const DeltaParent& dp,
                                             const DensityEstimate& estimate,
                                             const NeighborGraph& graph);

/// Labels in decreasing g order; centers[c] receives label c.
std::vector<ClusterId> assign_points(std::span<const double> g, std::span<const PointId> parent,
                                     std::span<const PointId> centers);

struct Saddle {
  ClusterId a = 0;  ///< a < b
  ClusterId b = 0;
  double log_rho = 0.0;
  double err = 0.0;
  PointId border_point = 0;
};

class SaddleTable {
 public:
  using Key = std::pair<ClusterId, ClusterId>;

  static Key key(ClusterId a, ClusterId b) { return a < b ? Key{a, b} : Key{b, a}; }

  const Saddle* find(ClusterId a, ClusterId b) const;
  void put(const Saddle& s);
  void erase(ClusterId a, ClusterId b) { table_.erase(key(a, b)); }
  std::size_t size() const { return table_.size(); }
  bool empty() const { return table_.empty(); }
  std::vector<Saddle> all() const;

  /// Every border point found, ascending.
  std::vector<PointId> border_points;

 private:
  std::map<Key, Saddle> table_;
};

SaddleTable find_borders_saddles(std::span<const ClusterId> labels, const NeighborGraph& graph,
                                 std::span<const double> g, const DensityEstimate& estimate,
                                 const DistanceOracle& oracle);

struct PeakAssignment {
  std::vector<double> g;
  std::vector<double> delta;
  std::vector<PointId> parent;
  std::vector<ClusterId> label;
  std::vector<bool> is_center;
  std::vector<bool> is_halo;
  std::vector<PointId> centers;  ///< centers[c] is the center of cluster c
  std::size_t n_clusters = 0;
};

struct MergeEvent {
  PointId absorbed_center = 0;
  PointId survivor_center = 0;
  double saddle_log_rho = 0.0;
  double saddle_err = 0.0;
  double gap = 0.0;        ///< log_rho(absorbed center) - saddle log_rho
  double threshold = 0.0;  ///< z * (err(absorbed center) + saddle err)
};

struct MergeResult {
  PeakAssignment assignment;
  SaddleTable saddles;
  std::vector<MergeEvent> log;
};

/// Repeatedly merges the lower-peak cluster of the densest saddle for which
/// the peak is not significantly above the saddle, then relabels densely in
/// decreasing center g.
MergeResult merge_clusters(PeakAssignment assignment, SaddleTable saddles,
                           const DensityEstimate& estimate, const ClusterConfig& config);

std::vector<bool> flag_halo(const PeakAssignment& assignment, const SaddleTable& saddles,
                            const DensityEstimate& estimate, HaloRule rule = HaloRule::kHighest);

/// Putative peaks and saddles, before any statistical merging.
struct PeakSearch {
  PeakAssignment assignment;
  SaddleTable saddles;
};

PeakSearch find_peaks(const DensityEstimate& estimate, const NeighborGraph& graph,
                      const DistanceOracle& oracle);

struct Clustering {
  PeakAssignment assignment;
  SaddleTable saddles;
  std::vector<MergeEvent> merges;
  std::size_t n_putative = 0;
};

Clustering finalize_clusters(const PeakSearch& peaks, const DensityEstimate& estimate,
                             const ClusterConfig& config);

Clustering cluster_density_peaks(const DensityEstimate& estimate, const NeighborGraph& graph,
                                 const DistanceOracle& oracle, const ClusterConfig& config);

/// Header `point_id label is_center is_halo g log_rho err k_hat delta parent`,
/// parent -1 when absent.
void write_assignment_tsv(std::ostream& out, const PeakAssignment& assignment,
                          const DensityEstimate& estimate);

/// The (point_id, label, is_halo) columns of an assignment file.
struct AssignmentColumns {
  std::vector<ClusterId> label;
  std::vector<bool> is_halo;
};
AssignmentColumns read_assignment_tsv(std::istream& in, const std::string& source = "<stream>");
AssignmentColumns read_assignment_tsv(const std::filesystem::path& path);

}  // namespace peaktopo
