#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "peaktopo/clustering.hpp"
#include "peaktopo/density.hpp"
#include "peaktopo/intrinsic_dim.hpp"
#include "peaktopo/metrics.hpp"
#include "peaktopo/neighbors.hpp"
#include "peaktopo/topography.hpp"

namespace peaktopo {

enum class InputFormat { kCoords, kMatrix, kKnn };

std::string_view to_string(InputFormat format);
InputFormat parse_input_format(std::string_view name);

struct RunConfig {
  std::filesystem::path input;
  InputFormat format = InputFormat::kCoords;
  Metric metric = Metric::kEuclidean;
  std::size_t k_max = 0;  ///< 0: min(n - 1, 512)
  double z = 1.0;
  std::optional<double> d_override;
  bool round_id = false;
  double discard_fraction = 0.1;
  LinearAnsatz ansatz = LinearAnsatz::kVolume;
  HaloRule halo_rule = HaloRule::kHighest;
  bool halo = true;
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
  std::optional<std::filesystem::path> truth;
  bool exclude_halo = false;

  void validate() const;
  /// Flat `key = value` lines, keys named after the CLI flags.
  std::string to_config_text() const;
};

/// Input data plus the neighbor graph built from it. Not movable once an
/// oracle has been taken, since the oracle points into it.
class LoadedInput {
 public:
  static LoadedInput load(const RunConfig& config);
  static LoadedInput from_points(PointSet points, std::size_t k_max, Metric metric);
  static LoadedInput from_matrix(DistanceMatrix matrix, std::size_t k_max);

  const NeighborGraph& graph() const { return graph_; }
  std::size_t n_points() const { return graph_.n_points(); }
  bool has_distances() const { return points_.has_value() || matrix_.has_value(); }
  /// Throws ConfigError for kNN-only input.
  DistanceOracle oracle() const;

 private:
  std::optional<PointSet> points_;
  std::optional<DistanceMatrix> matrix_;
  Metric metric_ = Metric::kEuclidean;
  NeighborGraph graph_;
};

struct DimensionChoice {
  double d = 0.0;
  std::optional<IdEstimate> estimate;  ///< absent when overridden
};

DimensionChoice choose_dimension(const NeighborGraph& graph, const RunConfig& config);

/// Everything the fused run produces, held in memory.
struct PipelineResult {
  std::size_t n_points = 0;
  DimensionChoice dimension;
  DensityEstimate density;
  Clustering clustering;
  Topography topography;
  Dendrogram dendrogram;
  Network network;
  std::optional<double> nmi;
  /// file name -> contents
  std::map<std::string, std::string> files;

  std::size_t n_halo() const;
  std::string summary() const;
};

/// Runs neighbors -> intrinsic dimension -> density -> clustering ->
/// topography -> optional evaluation entirely in memory. Stage failures are
/// rethrown with the stage name prefixed.
PipelineResult compute_pipeline(const RunConfig& config);

/// compute_pipeline, then writes every file into config.out_dir. If writing
/// fails, files already written are removed.
PipelineResult run_pipeline(const RunConfig& config);

/// Renders the topography outputs (topography.json, dendrogram.nwk,
/// dendrogram_layout.json, network.dot).
std::map<std::string, std::string> render_topography_files(const Topography& topo,
                                                           const Dendrogram& dendrogram,
                                                           const Network& network);

struct Evaluation {
  double nmi = 0.0;           ///< truth vs majority-relabeled prediction
  double nmi_clusters = 0.0;  ///< truth vs raw cluster ids
  ConfusionMatrix confusion;
  std::vector<ClusterPurity> purity;
  std::size_t n_points = 0;
};

Evaluation evaluate(std::span<const ClusterId> labels, const std::vector<bool>& halo,
                    std::span<const Label> truth, bool exclude_halo);
std::map<std::string, std::string> render_evaluation_files(const Evaluation& evaluation);

void write_files(const std::filesystem::path& dir, const std::map<std::string, std::string>& files);

}  // namespace peaktopo
