#include "peaktopo/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"
#include "peaktopo/neighbors_io.hpp"

namespace peaktopo {

std::string_view to_string(InputFormat format) {
  switch (format) {
    case InputFormat::kCoords:
      return "coords";
    case InputFormat::kMatrix:
      return "matrix";
    case InputFormat::kKnn:
      return "knn";
  }
  return "unknown";
}

InputFormat parse_input_format(std::string_view name) {
  if (name == "coords") return InputFormat::kCoords;
  if (name == "matrix") return InputFormat::kMatrix;
  if (name == "knn") return InputFormat::kKnn;
  throw ConfigError(fmt::format("unknown input format '{}'", name));
}

void RunConfig::validate() const {
  if (input.empty()) throw ConfigError("no input file given");
  if (!(z >= 0.0)) throw ConfigError(fmt::format("Z must be non-negative, got {}", z));
  if (d_override && !(*d_override > 0.0))
    throw ConfigError(fmt::format("intrinsic dimension must be positive, got {}", *d_override));
  if (!(discard_fraction >= 0.0 && discard_fraction < 1.0))
    throw ConfigError(fmt::format("discard fraction {} not in [0, 1)", discard_fraction));
  if (exclude_halo && !truth) throw ConfigError("--exclude-halo needs --truth");
}

std::string RunConfig::to_config_text() const {
  std::string out;
  out += fmt::format("input = {}\n", input.string());
  out += fmt::format("format = {}\n", to_string(format));
  out += fmt::format("metric = {}\n", to_string(metric));
  out += fmt::format("k-max = {}\n", k_max);
  out += fmt::format("z = {}\n", z);
  if (d_override) out += fmt::format("d = {}\n", *d_override);
  out += fmt::format("round-id = {}\n", round_id);
  out += fmt::format("discard = {}\n", discard_fraction);
  out += fmt::format("ansatz = {}\n", to_string(ansatz));
  out += fmt::format("halo = {}\n", halo);
  out += fmt::format("halo-rule = {}\n", to_string(halo_rule));
  out += fmt::format("seed = {}\n", seed);
  if (truth) out += fmt::format("truth = {}\n", truth->string());
  out += fmt::format("exclude-halo = {}\n", exclude_halo);
  return out;
}

LoadedInput LoadedInput::from_points(PointSet points, std::size_t k_max, Metric metric) {
  LoadedInput in;
  validate(points);
  if (k_max == 0) k_max = default_k_max(points.n_points);
  in.graph_ = build_neighbor_graph(points, k_max, metric);
  in.points_ = std::move(points);
  in.metric_ = metric;
  return in;
}

LoadedInput LoadedInput::from_matrix(DistanceMatrix matrix, std::size_t k_max) {
  LoadedInput in;
  if (k_max == 0) k_max = default_k_max(matrix.size());
  in.graph_ = ingest_distance_matrix(matrix, k_max);
  in.matrix_ = std::move(matrix);
  return in;
}

LoadedInput LoadedInput::load(const RunConfig& config) {
  switch (config.format) {
    case InputFormat::kCoords:
      return from_points(read_points_tsv(config.input), config.k_max, config.metric);
    case InputFormat::kMatrix:
      return from_matrix(read_distance_matrix_tsv(config.input), config.k_max);
    case InputFormat::kKnn: {
      LoadedInput in;
      in.graph_ = ingest_knn_file(config.input);
      if (config.k_max != 0 && config.k_max != in.graph_.k_max())
        throw ConfigError(fmt::format("--k-max {} does not match the {} neighbors in '{}'",
                                      config.k_max, in.graph_.k_max(), config.input.string()));
      return in;
    }
  }
  throw ConfigError("unsupported input format");
}

DistanceOracle LoadedInput::oracle() const {
  if (points_) return DistanceOracle(*points_, metric_);
  if (matrix_) return DistanceOracle(*matrix_);
  throw ConfigError(
      "peak detection needs distances between arbitrary points; kNN lists alone are not enough "
      "(use coordinate or distance-matrix input)");
}

DimensionChoice choose_dimension(const NeighborGraph& graph, const RunConfig& config) {
  if (config.d_override) return {*config.d_override, std::nullopt};
  IdEstimate est = twonn_estimate(graph, config.discard_fraction);
  double d = est.d_hat;
  if (config.round_id) d = std::max(1.0, std::round(d));
  return {d, est};
}

std::size_t PipelineResult::n_halo() const {
  std::size_t count = 0;
  for (bool h : clustering.assignment.is_halo) count += h ? 1 : 0;
  return count;
}

std::string PipelineResult::summary() const {
  std::string out = fmt::format("n\t{}\n", n_points);
  if (dimension.estimate)
    out += fmt::format("d_hat\t{}\n", dimension.estimate->d_hat);
  out += fmt::format("d\t{}\n", dimension.d);
  out += fmt::format("n_putative\t{}\n", clustering.n_putative);
  out += fmt::format("n_clusters\t{}\n", clustering.assignment.n_clusters);
  out += fmt::format("n_halo\t{}\n", n_halo());
  if (nmi) out += fmt::format("nmi\t{}\n", *nmi);
  return out;
}

namespace {

template <typename F>
auto stage(std::string_view name, F&& body) -> decltype(body()) {
  try {
    return body();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("stage '{}': {}", name, e.what()));
  } catch (const DataError& e) {
    throw DataError(fmt::format("stage '{}': {}", name, e.what()));
  } catch (const InvariantError& e) {
    throw InvariantError(fmt::format("stage '{}': {}", name, e.what()));
  }
}

std::string merges_tsv(const std::vector<MergeEvent>& merges) {
  std::string out = "absorbed_center\tsurvivor_center\tsaddle_log_rho\tsaddle_err\tgap\tthreshold\n";
  for (const auto& m : merges)
    out += fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", m.absorbed_center, m.survivor_center,
                       m.saddle_log_rho, m.saddle_err, m.gap, m.threshold);
  return out;
}

}  // namespace

std::map<std::string, std::string> render_topography_files(const Topography& topo,
                                                           const Dendrogram& dendrogram,
                                                           const Network& network) {
  std::map<std::string, std::string> files;
  files["topography.json"] = to_json(topo).dump(2) + "\n";
  files["dendrogram.nwk"] = to_newick(dendrogram) + "\n";
  files["dendrogram_layout.json"] = dendrogram_layout_json(dendrogram).dump(2) + "\n";
  files["network.dot"] = to_dot(network);
  return files;
}

Evaluation evaluate(std::span<const ClusterId> labels, const std::vector<bool>& halo,
                    std::span<const Label> truth, bool exclude_halo) {
  auto partition = LabeledPartition::make(labels, truth, halo, exclude_halo);
  if (partition.size() == 0) throw DataError("no points left to evaluate");
  Evaluation ev;
  ev.n_points = partition.size();
  auto majority = majority_labels(partition);
  ev.nmi = nmi(partition.truth, relabel_by_majority(partition, majority));
  ev.nmi_clusters = nmi(partition);
  ev.confusion = confusion_matrix(partition, majority);
  ev.purity = purity_table(partition);
  return ev;
}

std::map<std::string, std::string> render_evaluation_files(const Evaluation& ev) {
  std::map<std::string, std::string> files;
  std::ostringstream confusion, purity;
  write_confusion_tsv(confusion, ev.confusion);
  write_purity_tsv(purity, ev.purity);
  files["confusion.tsv"] = confusion.str();
  files["purity.tsv"] = purity.str();
  files["evaluation.tsv"] =
      fmt::format("nmi\t{}\nnmi_clusters\t{}\nn_points\t{}\n", ev.nmi, ev.nmi_clusters, ev.n_points);
  return files;
}

PipelineResult compute_pipeline(const RunConfig& config) {
  config.validate();
  PipelineResult res;
  const LoadedInput input = stage("neighbors", [&] { return LoadedInput::load(config); });
  res.n_points = input.n_points();
  const NeighborGraph& graph = input.graph();
  res.dimension = stage("intrinsic-dimension", [&] { return choose_dimension(graph, config); });

  res.density = stage("density", [&] {
    DensityConfig dc = DensityConfig::for_dimension(res.dimension.d);
    dc.ansatz = config.ansatz;
    return estimate_density(graph, dc);
  });

  res.clustering = stage("clustering", [&] {
    ClusterConfig cc;
    cc.z = config.z;
    cc.halo = config.halo;
    cc.halo_rule = config.halo_rule;
    return cluster_density_peaks(res.density, graph, input.oracle(), cc);
  });

  stage("topography", [&] {
    res.topography = build_topography(res.clustering, res.density);
    std::vector<std::size_t> populations;
    std::vector<double> peaks;
    for (const auto& c : res.topography.clusters) {
      populations.push_back(c.population);
      peaks.push_back(c.peak_log_rho);
    }
    res.dendrogram = single_linkage(res.topography.distances, populations, peaks);
    for (std::size_t i = res.dendrogram.n_leaves; i < res.dendrogram.nodes.size(); ++i) {
      const auto& node = res.dendrogram.nodes[i];
      for (auto child : {*node.left, *node.right})
        if (res.dendrogram.nodes[child].left && res.dendrogram.nodes[child].height > node.height)
          throw InvariantError("dendrogram merge heights are not monotone");
    }
    res.network = network_export(res.topography);
    return 0;
  });

  std::ostringstream density_out, assignment_out;
  write_density_tsv(density_out, res.density);
  write_assignment_tsv(assignment_out, res.clustering.assignment, res.density);
  res.files["density.tsv"] = density_out.str();
  res.files["assignment.tsv"] = assignment_out.str();
  res.files["merges.tsv"] = merges_tsv(res.clustering.merges);
  res.files.merge(render_topography_files(res.topography, res.dendrogram, res.network));
  res.files["config.txt"] = config.to_config_text();

  if (config.truth) {
    stage("evaluate", [&] {
      auto truth = read_truth_tsv(*config.truth);
      const auto& a = res.clustering.assignment;
      Evaluation ev = evaluate(a.label, a.is_halo, truth, config.exclude_halo);
      res.nmi = ev.nmi;
      res.files.merge(render_evaluation_files(ev));
      return 0;
    });
  }
  res.files["summary.tsv"] = res.summary();
  return res;
}

void write_files(const std::filesystem::path& dir, const std::map<std::string, std::string>& files) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError(fmt::format("cannot create '{}': {}", dir.string(), ec.message()));
  std::vector<std::filesystem::path> written;
  try {
    for (const auto& [name, contents] : files) {
      const auto path = dir / name;
      std::ofstream out(path, std::ios::binary);
      written.push_back(path);
      out << contents;
      if (!out) throw DataError(fmt::format("cannot write '{}'", path.string()));
    }
  } catch (...) {
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

PipelineResult run_pipeline(const RunConfig& config) {
  if (config.out_dir.empty()) throw ConfigError("no output directory given");
  PipelineResult res = compute_pipeline(config);
  write_files(config.out_dir, res.files);
  return res;
}

}  // namespace peaktopo
