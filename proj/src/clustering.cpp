#include "peaktopo/clustering.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"

namespace peaktopo {

std::string_view to_string(HaloRule rule) {
  switch (rule) {
    case HaloRule::kHighest:
      return "highest";
    case HaloRule::kLowest:
      return "lowest";
    case HaloRule::kGlobalLowest:
      return "global-lowest";
  }
  return "unknown";
}

HaloRule parse_halo_rule(std::string_view name) {
  if (name == "highest") return HaloRule::kHighest;
  if (name == "lowest") return HaloRule::kLowest;
  if (name == "global-lowest") return HaloRule::kGlobalLowest;
  throw ConfigError(fmt::format("unknown halo rule '{}'", name));
}

void ClusterConfig::validate() const {
  if (!(z >= 0.0)) throw ConfigError(fmt::format("Z must be non-negative, got {}", z));
}

std::vector<double> compute_g(const DensityEstimate& estimate) {
  std::vector<double> g(estimate.size());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = estimate.log_rho[i] + estimate.err[i];
  return g;
}

namespace {

std::vector<PointId> rank_order(std::span<const double> g) {
  std::vector<PointId> order(g.size());
  std::iota(order.begin(), order.end(), PointId{0});
  std::sort(order.begin(), order.end(), [&](PointId a, PointId b) { return ranks_above(g, a, b); });
  return order;
}

}  // namespace

DeltaParent compute_delta_parent(std::span<const double> g, const NeighborGraph& graph,
                                 const DistanceOracle& oracle) {
  const std::size_t n = g.size();
  if (graph.n_points() != n || oracle.size() != n)
    throw ConfigError("density, neighbor graph and distance source disagree on point count");

  DeltaParent dp;
  dp.delta.assign(n, 0.0);
  dp.parent.assign(n, kNoParent);
  dp.top = rank_order(g).front();

  for (std::size_t i = 0; i < n; ++i) {
    if (i == dp.top) continue;
    const auto ids = graph.ids(i);
    const auto d = graph.dists(i);
    bool found = false;
    for (std::size_t l = 0; l < ids.size(); ++l) {
      if (g[ids[l]] > g[i]) {
        dp.parent[i] = ids[l];
        dp.delta[i] = d[l];
        found = true;
        break;
      }
    }
    if (found) continue;

    // Nothing higher among the stored neighbors: exhaustive scan. Equal-g
    // points ranking above i are used only if no strictly higher point exists.
    double best = std::numeric_limits<double>::infinity();
    PointId best_id = kNoParent;
    bool best_strict = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const bool strict = g[j] > g[i];
      if (!strict && !ranks_above(g, static_cast<PointId>(j), static_cast<PointId>(i))) continue;
      if (best_strict && !strict) continue;
      const double dij = oracle(i, j);
      if ((strict && !best_strict) || dij < best || (dij == best && j < best_id)) {
        best = dij;
        best_id = static_cast<PointId>(j);
        best_strict = strict;
      }
    }
    if (best_id == kNoParent) throw InvariantError(fmt::format("point {} has no higher point", i));
    dp.parent[i] = best_id;
    dp.delta[i] = best;
  }

  double farthest = 0.0;
  for (std::size_t j = 0; j < n; ++j)
    if (j != dp.top) farthest = std::max(farthest, oracle(dp.top, j));
  dp.delta[dp.top] = farthest;
  return dp;
}

std::vector<PointId> detect_putative_centers(std::span<const double> g, const DeltaParent& dp,
                                             const DensityEstimate& estimate,
                                             const NeighborGraph& graph) {
  const std::size_t n = g.size();
  std::vector<bool> vetoed(n, false);
  for (std::size_t j = 0; j < n; ++j) {
    const auto ids = graph.ids(j);
    const std::size_t k_hat = std::min(estimate.k_hat[j], ids.size());
    for (std::size_t l = 0; l < k_hat; ++l) {
      if (g[j] > g[ids[l]]) vetoed[ids[l]] = true;
    }
  }
  std::vector<PointId> centers;
  for (PointId i : rank_order(g)) {
    const bool isolated = i == dp.top || dp.delta[i] > estimate.r_khat[i];
    if (isolated && !vetoed[i]) centers.push_back(i);
  }
  if (centers.empty()) throw DataError("no putative density peak found");
  return centers;
}

std::vector<ClusterId> assign_points(std::span<const double> g, std::span<const PointId> parent,
                                     std::span<const PointId> centers) {
  if (centers.empty()) throw ConfigError("cannot assign points without centers");
  constexpr ClusterId kUnset = std::numeric_limits<ClusterId>::max();
  std::vector<ClusterId> label(g.size(), kUnset);
  for (std::size_t c = 0; c < centers.size(); ++c) label[centers[c]] = static_cast<ClusterId>(c);
  for (PointId i : rank_order(g)) {
    if (label[i] != kUnset) continue;
    if (parent[i] == kNoParent || label[parent[i]] == kUnset)
      throw InvariantError(fmt::format("point {} visited before its parent was labeled", i));
    label[i] = label[parent[i]];
  }
  return label;
}

const Saddle* SaddleTable::find(ClusterId a, ClusterId b) const {
  auto it = table_.find(key(a, b));
  return it == table_.end() ? nullptr : &it->second;
}

void SaddleTable::put(const Saddle& s) {
  Saddle stored = s;
  if (stored.a > stored.b) std::swap(stored.a, stored.b);
  table_[{stored.a, stored.b}] = stored;
}

std::vector<Saddle> SaddleTable::all() const {
  std::vector<Saddle> out;
  out.reserve(table_.size());
  for (const auto& [k, s] : table_) out.push_back(s);
  return out;
}

SaddleTable find_borders_saddles(std::span<const ClusterId> labels, const NeighborGraph& graph,
                                 std::span<const double> g, const DensityEstimate& estimate,
                                 const DistanceOracle& oracle) {
  const std::size_t n = labels.size();

  // Nearest point labeled `c` to j, ties by id.
  auto nearest_in_cluster = [&](PointId j, ClusterId c) -> PointId {
    for (PointId m : graph.ids(j))
      if (labels[m] == c) return m;
    double best = std::numeric_limits<double>::infinity();
    PointId best_id = kNoParent;
    for (std::size_t m = 0; m < n; ++m) {
      if (m == j || labels[m] != c) continue;
      const double d = oracle(j, m);
      if (d < best) {
        best = d;
        best_id = static_cast<PointId>(m);
      }
    }
    return best_id;
  };

  std::map<SaddleTable::Key, PointId> best;
  std::vector<bool> border(n, false);
  std::vector<ClusterId> seen;
  for (std::size_t i = 0; i < n; ++i) {
    const ClusterId c = labels[i];
    const auto ids = graph.ids(i);
    const auto d = graph.dists(i);
    seen.clear();
    for (std::size_t l = 0; l < ids.size() && d[l] <= estimate.r_khat[i]; ++l) {
      const PointId j = ids[l];
      const ClusterId other = labels[j];
      if (other == c || std::find(seen.begin(), seen.end(), other) != seen.end()) continue;
      seen.push_back(other);
      if (nearest_in_cluster(j, c) != i) continue;
      border[i] = true;
      auto key = SaddleTable::key(c, other);
      auto it = best.find(key);
      if (it == best.end()) {
        best.emplace(key, static_cast<PointId>(i));
      } else if (ranks_above(g, static_cast<PointId>(i), it->second)) {
        it->second = static_cast<PointId>(i);
      }
    }
  }

  SaddleTable table;
  for (const auto& [key, point] : best)
    table.put({key.first, key.second, estimate.log_rho[point], estimate.err[point], point});
  for (std::size_t i = 0; i < n; ++i)
    if (border[i]) table.border_points.push_back(static_cast<PointId>(i));
  return table;
}

MergeResult merge_clusters(PeakAssignment assignment, SaddleTable saddles,
                           const DensityEstimate& estimate, const ClusterConfig& config) {
  config.validate();
  const std::size_t n_clusters = assignment.centers.size();
  const auto& g = assignment.g;
  const auto& centers = assignment.centers;

  // owner[c]: cluster that c has been merged into (c itself while alive).
  std::vector<ClusterId> owner(n_clusters);
  std::iota(owner.begin(), owner.end(), ClusterId{0});
  std::vector<MergeEvent> log;

  while (true) {
    auto pairs = saddles.all();
    std::stable_sort(pairs.begin(), pairs.end(),
                     [](const Saddle& x, const Saddle& y) { return x.log_rho > y.log_rho; });
    bool merged = false;
    for (const Saddle& s : pairs) {
      const bool a_higher = ranks_above(g, centers[s.a], centers[s.b]);
      const ClusterId low = a_higher ? s.b : s.a;
      const ClusterId high = a_higher ? s.a : s.b;
      const double gap = estimate.log_rho[centers[low]] - s.log_rho;
      const double threshold = config.z * (estimate.err[centers[low]] + s.err);
      if (!(gap < threshold)) continue;

      log.push_back({centers[low], centers[high], s.log_rho, s.err, gap, threshold});
      assignment.parent[centers[low]] = centers[high];
      for (auto& o : owner)
        if (o == low) o = high;

      saddles.erase(low, high);
      for (const Saddle& t : saddles.all()) {
        if (t.a != low && t.b != low) continue;
        const ClusterId other = t.a == low ? t.b : t.a;
        saddles.erase(low, other);
        const Saddle* existing = saddles.find(high, other);
        if (existing == nullptr || t.log_rho > existing->log_rho ||
            (t.log_rho == existing->log_rho && t.border_point < existing->border_point)) {
          Saddle moved = t;
          moved.a = high;
          moved.b = other;
          saddles.put(moved);
        }
      }
      merged = true;
      break;
    }
    if (!merged) break;
  }

  // Survivors keep the decreasing-g order of their centers.
  std::vector<ClusterId> new_label(n_clusters, 0);
  std::vector<PointId> new_centers;
  for (ClusterId c = 0; c < n_clusters; ++c) {
    if (owner[c] == c) {
      new_label[c] = static_cast<ClusterId>(new_centers.size());
      new_centers.push_back(centers[c]);
    }
  }
  for (auto& l : assignment.label) l = new_label[owner[l]];
  std::fill(assignment.is_center.begin(), assignment.is_center.end(), false);
  for (PointId c : new_centers) assignment.is_center[c] = true;
  assignment.centers = std::move(new_centers);
  assignment.n_clusters = assignment.centers.size();

  SaddleTable relabeled;
  relabeled.border_points = saddles.border_points;
  for (Saddle s : saddles.all()) {
    s.a = new_label[s.a];
    s.b = new_label[s.b];
    relabeled.put(s);
  }
  return {std::move(assignment), std::move(relabeled), std::move(log)};
}

std::vector<bool> flag_halo(const PeakAssignment& assignment, const SaddleTable& saddles,
                            const DensityEstimate& estimate, HaloRule rule) {
  const std::size_t k = assignment.n_clusters;
  std::vector<double> threshold(k, -std::numeric_limits<double>::infinity());
  std::vector<bool> has_saddle(k, false);
  double global_low = std::numeric_limits<double>::infinity();
  for (const Saddle& s : saddles.all()) global_low = std::min(global_low, s.log_rho);
  for (const Saddle& s : saddles.all()) {
    for (ClusterId c : {s.a, s.b}) {
      double value = rule == HaloRule::kGlobalLowest ? global_low : s.log_rho;
      if (!has_saddle[c]) {
        threshold[c] = value;
        has_saddle[c] = true;
      } else if (rule == HaloRule::kHighest) {
        threshold[c] = std::max(threshold[c], value);
      } else {
        threshold[c] = std::min(threshold[c], value);
      }
    }
  }
  std::vector<bool> halo(assignment.label.size(), false);
  for (std::size_t i = 0; i < halo.size(); ++i) {
    const ClusterId c = assignment.label[i];
    halo[i] = has_saddle[c] && estimate.log_rho[i] < threshold[c];
  }
  return halo;
}

PeakSearch find_peaks(const DensityEstimate& estimate, const NeighborGraph& graph,
                      const DistanceOracle& oracle) {
  PeakSearch out;
  PeakAssignment& pa = out.assignment;
  const std::size_t n = estimate.size();
  pa.g = compute_g(estimate);
  DeltaParent dp = compute_delta_parent(pa.g, graph, oracle);
  pa.centers = detect_putative_centers(pa.g, dp, estimate, graph);
  pa.delta = std::move(dp.delta);
  pa.parent = std::move(dp.parent);
  pa.is_center.assign(n, false);
  for (PointId c : pa.centers) {
    pa.is_center[c] = true;
    pa.parent[c] = kNoParent;
  }
  pa.label = assign_points(pa.g, pa.parent, pa.centers);
  pa.is_halo.assign(n, false);
  pa.n_clusters = pa.centers.size();
  out.saddles = find_borders_saddles(pa.label, graph, pa.g, estimate, oracle);
  return out;
}

Clustering finalize_clusters(const PeakSearch& peaks, const DensityEstimate& estimate,
                             const ClusterConfig& config) {
  auto merged = merge_clusters(peaks.assignment, peaks.saddles, estimate, config);
  Clustering out;
  out.n_putative = peaks.assignment.n_clusters;
  out.assignment = std::move(merged.assignment);
  out.saddles = std::move(merged.saddles);
  out.merges = std::move(merged.log);
  if (config.halo)
    out.assignment.is_halo = flag_halo(out.assignment, out.saddles, estimate, config.halo_rule);
  return out;
}

Clustering cluster_density_peaks(const DensityEstimate& estimate, const NeighborGraph& graph,
                                 const DistanceOracle& oracle, const ClusterConfig& config) {
  config.validate();
  return finalize_clusters(find_peaks(estimate, graph, oracle), estimate, config);
}

void write_assignment_tsv(std::ostream& out, const PeakAssignment& a,
                          const DensityEstimate& estimate) {
  out << "point_id\tlabel\tis_center\tis_halo\tg\tlog_rho\terr\tk_hat\tdelta\tparent\n";
  for (std::size_t i = 0; i < a.label.size(); ++i) {
    const long long parent = a.parent[i] == kNoParent ? -1 : static_cast<long long>(a.parent[i]);
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n", i, a.label[i],
                       a.is_center[i] ? 1 : 0, a.is_halo[i] ? 1 : 0, a.g[i], estimate.log_rho[i],
                       estimate.err[i], estimate.k_hat[i], a.delta[i], parent);
  }
}

AssignmentColumns read_assignment_tsv(std::istream& in, const std::string& source) {
  AssignmentColumns cols;
  std::string line;
  std::size_t line_no = 0;
  auto parse = [&](std::string_view f, auto& value) {
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), value);
    if (ec != std::errc() || ptr != f.data() + f.size())
      throw DataError(fmt::format("{}:{}: cannot parse '{}'", source, line_no, f));
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.starts_with("point_id") || line.front() == '#') continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    for (std::size_t tab; (tab = rest.find('\t')) != std::string_view::npos;) {
      f.push_back(rest.substr(0, tab));
      rest.remove_prefix(tab + 1);
    }
    f.push_back(rest);
    if (f.size() < 4)
      throw DataError(fmt::format("{}:{}: expected at least 4 columns", source, line_no));
    std::size_t id = 0;
    ClusterId label = 0;
    int halo = 0;
    parse(f[0], id);
    parse(f[1], label);
    parse(f[3], halo);
    if (id != cols.label.size())
      throw DataError(fmt::format("{}:{}: expected point {}, found {}", source, line_no,
                                  cols.label.size(), id));
    cols.label.push_back(label);
    cols.is_halo.push_back(halo != 0);
  }
  if (cols.label.empty()) throw DataError(fmt::format("{}: empty assignment file", source));
  return cols;
}

AssignmentColumns read_assignment_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_assignment_tsv(in, path.string());
}

}  // namespace peaktopo
