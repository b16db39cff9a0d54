// peaktopo: density-peak topography of point clouds from the command line.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "peaktopo/clustering.hpp"
#include "peaktopo/density.hpp"
#include "peaktopo/errors.hpp"
#include "peaktopo/intrinsic_dim.hpp"
#include "peaktopo/metrics.hpp"
#include "peaktopo/neighbors_io.hpp"
#include "peaktopo/pipeline.hpp"
#include "peaktopo/synth.hpp"
#include "peaktopo/topography.hpp"

namespace {

using namespace peaktopo;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;
constexpr int kExitInvariant = 4;

/// Option values as typed on the command line, converted once parsing is done.
struct CliOptions {
  RunConfig run;
  std::string format = "coords";
  std::string metric = "euclidean";
  std::string ansatz = "volume";
  std::string halo_rule = "highest";
  double d = 0.0;
  std::string truth;
  std::string out = "-";
  std::string out_dir;
  std::string density_file;
  std::string assignment_file;
  std::string config_file;

  // synth
  std::string kind;
  std::size_t n = 1000;
  std::size_t dim = 2;
  std::size_t components = 3;
  double separation = 10.0;
  double noise = 0.1;
  std::string labels_out;

  void finalize() {
    run.format = parse_input_format(format);
    run.metric = parse_metric(metric);
    run.ansatz = parse_linear_ansatz(ansatz);
    run.halo_rule = parse_halo_rule(halo_rule);
    if (d > 0.0) run.d_override = d;
    if (!truth.empty()) run.truth = truth;
    if (!out_dir.empty()) run.out_dir = out_dir;
  }
};

void add_config_option(CLI::App* sub, CliOptions& o) {
  sub->add_option("--config", o.config_file, "flat 'key = value' file; command-line flags win");
}

void add_input_options(CLI::App* sub, CliOptions& o) {
  sub->add_option("-i,--input", o.run.input, "input file")->required();
  sub->add_option("--format", o.format, "coords | matrix | knn")
      ->check(CLI::IsMember({"coords", "matrix", "knn"}));
  sub->add_option("--metric", o.metric, "euclidean | manhattan")
      ->check(CLI::IsMember({"euclidean", "manhattan"}));
  sub->add_option("--k-max", o.run.k_max, "neighbors per point (default min(n-1, 512))");
  add_config_option(sub, o);
}

void add_density_options(CLI::App* sub, CliOptions& o) {
  sub->add_option("--d", o.d, "intrinsic dimension; skips TWO-NN estimation");
  sub->add_flag("--round-id", o.run.round_id, "round the estimated dimension to an integer");
  sub->add_option("--discard", o.run.discard_fraction, "TWO-NN discard fraction");
  sub->add_option("--ansatz", o.ansatz, "volume | index")->check(CLI::IsMember({"volume", "index"}));
}

void add_cluster_options(CLI::App* sub, CliOptions& o) {
  sub->add_option("--z", o.run.z, "merge confidence Z");
  sub->add_flag("--halo,!--no-halo", o.run.halo, "flag halo points");
  sub->add_option("--halo-rule", o.halo_rule, "highest | lowest | global-lowest")
      ->check(CLI::IsMember({"highest", "lowest", "global-lowest"}));
  sub->add_option("--density", o.density_file, "reuse a density TSV instead of estimating");
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r\"");
  const auto e = s.find_last_not_of(" \t\r\"");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

/// Fills options of `sub` not given on the command line from the config file.
void apply_config_file(CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config file '{}'", path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#' || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(fmt::format("{}:{}: expected 'key = value'", path, line_no));
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key == "config") continue;
    CLI::Option* opt = sub->get_option_no_throw("--" + key);
    if (opt == nullptr || opt->count() > 0) continue;
    if (opt->get_expected_min() == 0 && value != "true" && value != "false")
      throw ConfigError(fmt::format("{}:{}: '{}' expects true or false", path, line_no, key));
    opt->add_result(value);
    opt->run_callback();
  }
}

void emit(const std::string& target, const std::string& contents) {
  if (target == "-") {
    std::cout << contents;
    return;
  }
  std::ofstream out(target, std::ios::binary);
  out << contents;
  if (!out) throw DataError(fmt::format("cannot write '{}'", target));
}

DensityEstimate density_for(const LoadedInput& input, const CliOptions& o) {
  if (!o.density_file.empty()) {
    DensityEstimate est = read_density_tsv(std::filesystem::path(o.density_file));
    if (est.size() != input.n_points())
      throw DataError(fmt::format("density file has {} points, input has {}", est.size(),
                                  input.n_points()));
    return est;
  }
  const auto dim = choose_dimension(input.graph(), o.run);
  DensityConfig dc = DensityConfig::for_dimension(dim.d);
  dc.ansatz = o.run.ansatz;
  return estimate_density(input.graph(), dc);
}

Clustering clustering_for(const LoadedInput& input, const DensityEstimate& est, const CliOptions& o) {
  ClusterConfig cc;
  cc.z = o.run.z;
  cc.halo = o.run.halo;
  cc.halo_rule = o.run.halo_rule;
  return cluster_density_peaks(est, input.graph(), input.oracle(), cc);
}

int cmd_estimate_id(const CliOptions& o) {
  o.run.validate();
  const auto input = LoadedInput::load(o.run);
  const auto est = twonn_estimate(input.graph(), o.run.discard_fraction);
  std::cout << fmt::format("{}\t{}\n", est.d_hat, est.n_used);
  return 0;
}

int cmd_density(const CliOptions& o) {
  o.run.validate();
  const auto input = LoadedInput::load(o.run);
  std::ostringstream out;
  write_density_tsv(out, density_for(input, o));
  emit(o.out, out.str());
  return 0;
}

int cmd_cluster(const CliOptions& o) {
  o.run.validate();
  const auto input = LoadedInput::load(o.run);
  const auto est = density_for(input, o);
  const auto clustering = clustering_for(input, est, o);
  std::ostringstream out;
  write_assignment_tsv(out, clustering.assignment, est);
  emit(o.out, out.str());
  return 0;
}

int cmd_topography(const CliOptions& o) {
  o.run.validate();
  if (o.run.out_dir.empty()) throw ConfigError("--out-dir is required");
  const auto input = LoadedInput::load(o.run);
  const auto est = density_for(input, o);
  const auto clustering = clustering_for(input, est, o);
  const auto topo = build_topography(clustering, est);
  std::vector<std::size_t> pops;
  std::vector<double> peaks;
  for (const auto& c : topo.clusters) {
    pops.push_back(c.population);
    peaks.push_back(c.peak_log_rho);
  }
  const auto tree = single_linkage(topo.distances, pops, peaks);
  write_files(o.run.out_dir, render_topography_files(topo, tree, network_export(topo)));
  if (topo.n_clusters() < 2) std::cerr << "note: fewer than 2 clusters, no 2-D layout\n";
  return 0;
}

int cmd_evaluate(const CliOptions& o) {
  if (o.assignment_file.empty() || o.truth.empty())
    throw ConfigError("evaluate needs --assignment and --truth");
  const auto cols = read_assignment_tsv(std::filesystem::path(o.assignment_file));
  const auto truth = read_truth_tsv(std::filesystem::path(o.truth));
  const auto ev = evaluate(cols.label, cols.is_halo, truth, o.run.exclude_halo);
  std::cout << fmt::format("nmi\t{}\nnmi_clusters\t{}\n", ev.nmi, ev.nmi_clusters);
  if (!o.out_dir.empty()) write_files(o.out_dir, render_evaluation_files(ev));
  return 0;
}

int cmd_synth(const CliOptions& o) {
  LabeledPoints data;
  if (o.kind == "gmm") {
    auto g = synth_gmm(o.components, o.n, o.dim, o.separation, o.run.seed);
    data = {std::move(g.points), std::move(g.labels)};
  } else if (o.kind == "spirals") {
    data = synth_spirals(o.n, o.noise, o.run.seed);
  } else {
    data.points = synth_uniform(o.n, o.dim, o.run.seed);
    data.labels.assign(o.n, 0);
  }
  std::ostringstream pts;
  write_points_tsv(pts, data.points);
  emit(o.out, pts.str());
  if (!o.labels_out.empty()) {
    std::ostringstream lab;
    write_truth_tsv(lab, data.labels);
    emit(o.labels_out, lab.str());
  }
  return 0;
}

int cmd_run(const CliOptions& o) {
  if (o.run.out_dir.empty()) throw ConfigError("--out-dir is required");
  const auto res = run_pipeline(o.run);
  std::cout << res.summary();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Density-peak topography: PAk densities, peaks, saddles, dendrogram and network"};
  app.require_subcommand(1);
  CliOptions o;

  auto* estimate_id = app.add_subcommand("estimate-id", "TWO-NN intrinsic dimension");
  add_input_options(estimate_id, o);
  estimate_id->add_option("--discard", o.run.discard_fraction, "fraction of largest ratios dropped");

  auto* density = app.add_subcommand("density", "PAk log-density with error per point");
  add_input_options(density, o);
  add_density_options(density, o);
  density->add_option("-o,--out", o.out, "output TSV ('-' for stdout)");

  auto* cluster = app.add_subcommand("cluster", "density-peak clustering with Z merging");
  add_input_options(cluster, o);
  add_density_options(cluster, o);
  add_cluster_options(cluster, o);
  cluster->add_option("-o,--out", o.out, "assignment TSV ('-' for stdout)");

  auto* topography = app.add_subcommand("topography", "topography JSON, dendrogram and network");
  add_input_options(topography, o);
  add_density_options(topography, o);
  add_cluster_options(topography, o);
  topography->add_option("--out-dir", o.out_dir, "output directory")->required();

  auto* eval = app.add_subcommand("evaluate", "NMI, confusion matrix and purity against labels");
  eval->add_option("--assignment", o.assignment_file, "assignment TSV from 'cluster'")->required();
  eval->add_option("--truth", o.truth, "TSV 'point_id label'")->required();
  eval->add_flag("--exclude-halo", o.run.exclude_halo, "ignore halo points");
  eval->add_option("--out-dir", o.out_dir, "write confusion.tsv and purity.tsv here");
  add_config_option(eval, o);

  auto* synth = app.add_subcommand("synth", "synthetic data sets");
  synth->add_option("kind", o.kind, "gmm | spirals | uniform")
      ->required()
      ->check(CLI::IsMember({"gmm", "spirals", "uniform"}));
  synth->add_option("--n", o.n, "number of points");
  synth->add_option("--dim", o.dim, "dimension (gmm, uniform)");
  synth->add_option("--k", o.components, "mixture components (gmm)");
  synth->add_option("--separation", o.separation, "minimum mean separation in sigmas (gmm)");
  synth->add_option("--noise", o.noise, "radial noise (spirals)");
  synth->add_option("--seed", o.run.seed, "random seed");
  synth->add_option("-o,--out", o.out, "points TSV ('-' for stdout)");
  synth->add_option("--labels", o.labels_out, "write generative labels here");
  add_config_option(synth, o);

  auto* run = app.add_subcommand("run", "full pipeline into an output directory");
  add_input_options(run, o);
  add_density_options(run, o);
  add_cluster_options(run, o);
  run->add_option("--out-dir", o.out_dir, "output directory")->required();
  run->add_option("--truth", o.truth, "ground-truth labels to evaluate against");
  run->add_flag("--exclude-halo", o.run.exclude_halo, "ignore halo points in the evaluation");
  run->add_option("--seed", o.run.seed, "recorded in the echoed configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    CLI::App* active = app.get_subcommands().front();
    if (!o.config_file.empty()) apply_config_file(active, o.config_file);
    o.finalize();
    if (active == estimate_id) return cmd_estimate_id(o);
    if (active == density) return cmd_density(o);
    if (active == cluster) return cmd_cluster(o);
    if (active == topography) return cmd_topography(o);
    if (active == eval) return cmd_evaluate(o);
    if (active == synth) return cmd_synth(o);
    if (active == run) return cmd_run(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const CLI::Error& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const InvariantError& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInvariant;
  }
  return kExitConfig;
}
