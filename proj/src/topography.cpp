#include "peaktopo/topography.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <Eigen/Dense>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"

namespace peaktopo {

namespace {

bool same_double(double x, double y) { return x == y || (std::isnan(x) && std::isnan(y)); }

bool same_matrix(const SquareMatrix& x, const SquareMatrix& y) {
  if (x.size() != y.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j)
      if (!same_double(x(i, j), y(i, j))) return false;
  return true;
}

}  // namespace

bool operator==(const Saddle& x, const Saddle& y) {
  return x.a == y.a && x.b == y.b && x.log_rho == y.log_rho && x.err == y.err &&
         x.border_point == y.border_point;
}

bool operator==(const Topography& x, const Topography& y) {
  return x.clusters == y.clusters && x.saddles == y.saddles &&
         same_matrix(x.saddle_matrix, y.saddle_matrix) && same_matrix(x.distances, y.distances);
}

SquareMatrix cluster_distances(const std::vector<ClusterSummary>& clusters,
                               const std::vector<Saddle>& saddles) {
  SquareMatrix d(clusters.size(), kNoContact);
  for (std::size_t c = 0; c < clusters.size(); ++c) d(c, c) = 0.0;
  for (const Saddle& s : saddles) {
    // F_cc' - min(F_c, F_c') = max(log rho_c, log rho_c') - log rho_cc'
    const double value =
        std::max(clusters[s.a].peak_log_rho, clusters[s.b].peak_log_rho) - s.log_rho;
    d(s.a, s.b) = value;
    d(s.b, s.a) = value;
  }
  return d;
}

double sentinel_height(const SquareMatrix& distances) {
  bool any = false;
  double max_finite = 0.0;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    for (std::size_t j = i + 1; j < distances.size(); ++j) {
      if (!std::isfinite(distances(i, j))) continue;
      max_finite = any ? std::max(max_finite, distances(i, j)) : distances(i, j);
      any = true;
    }
  }
  if (!any) return 1.0;
  return max_finite > 0.0 ? 1.05 * max_finite : max_finite + 1.0;
}

Topography build_topography(const Clustering& clustering, const DensityEstimate& estimate) {
  const PeakAssignment& pa = clustering.assignment;
  Topography topo;
  topo.clusters.resize(pa.n_clusters);
  for (ClusterId c = 0; c < pa.n_clusters; ++c) {
    const PointId center = pa.centers[c];
    topo.clusters[c] = {c, center, estimate.log_rho[center], estimate.err[center], 0};
  }
  for (ClusterId l : pa.label) ++topo.clusters[l].population;
  topo.saddles = clustering.saddles.all();

  topo.saddle_matrix = SquareMatrix(pa.n_clusters, std::numeric_limits<double>::quiet_NaN());
  for (std::size_t c = 0; c < pa.n_clusters; ++c)
    topo.saddle_matrix(c, c) = topo.clusters[c].peak_log_rho;
  for (const Saddle& s : topo.saddles) {
    topo.saddle_matrix(s.a, s.b) = s.log_rho;
    topo.saddle_matrix(s.b, s.a) = s.log_rho;
  }
  topo.distances = cluster_distances(topo.clusters, topo.saddles);
  return topo;
}

std::vector<double> Dendrogram::merge_heights() const {
  std::vector<double> h;
  for (std::size_t i = n_leaves; i < nodes.size(); ++i) h.push_back(nodes[i].height);
  return h;
}

Dendrogram single_linkage(const SquareMatrix& distances, const std::vector<std::size_t>& populations,
                          const std::vector<double>& peaks) {
  const std::size_t n = distances.size();
  if (n == 0) throw ConfigError("single linkage needs at least one cluster");
  Dendrogram tree;
  tree.n_leaves = n;
  tree.sentinel = sentinel_height(distances);
  for (std::size_t c = 0; c < n; ++c) {
    DendrogramNode leaf;
    leaf.id = c;
    leaf.population = populations.empty() ? 1 : populations[c];
    leaf.min_leaf = c;
    tree.nodes.push_back(leaf);
  }

  struct Edge {
    double height;
    std::size_t a, b;
    bool sentinel;
  };
  std::vector<Edge> edges;
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a + 1; b < n; ++b) {
      const bool contact = std::isfinite(distances(a, b));
      edges.push_back({contact ? distances(a, b) : tree.sentinel, a, b, !contact});
    }
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const Edge& x, const Edge& y) { return x.height < y.height; });

  // Union-find over leaves; top[root] is the dendrogram node of the component.
  std::vector<std::size_t> uf(n), top(n);
  std::iota(uf.begin(), uf.end(), 0);
  std::iota(top.begin(), top.end(), 0);
  std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  for (const Edge& e : edges) {
    std::size_t ra = find(e.a), rb = find(e.b);
    if (ra == rb) continue;
    std::size_t left = top[ra], right = top[rb];
    if (tree.nodes[right].min_leaf < tree.nodes[left].min_leaf) std::swap(left, right);
    DendrogramNode node;
    node.id = tree.nodes.size();
    node.left = left;
    node.right = right;
    node.height = e.height;
    node.sentinel = e.sentinel;
    node.population = tree.nodes[left].population + tree.nodes[right].population;
    node.min_leaf = tree.nodes[left].min_leaf;
    tree.nodes.push_back(node);
    uf[rb] = ra;
    top[ra] = node.id;
  }
  tree.root = tree.nodes.size() - 1;

  std::vector<std::size_t> stack{tree.root};
  while (!stack.empty()) {
    std::size_t id = stack.back();
    stack.pop_back();
    const auto& node = tree.nodes[id];
    if (!node.left) {
      tree.leaf_order.push_back(static_cast<ClusterId>(id));
      continue;
    }
    stack.push_back(*node.right);
    stack.push_back(*node.left);
  }

  double x = 0.0;
  for (ClusterId c : tree.leaf_order) {
    const double w = static_cast<double>(tree.nodes[c].population);
    tree.layout.push_back({c, x + 0.5 * w, w, peaks.empty() ? 0.0 : peaks[c]});
    x += w;
  }
  return tree;
}

std::string to_newick(const Dendrogram& tree) {
  std::function<std::string(std::size_t, double)> emit = [&](std::size_t id, double parent_height) {
    const auto& node = tree.nodes[id];
    const double length = parent_height - node.height;
    if (!node.left) return fmt::format("C{}:{}", id, length);
    return fmt::format("({},{}):{}", emit(*node.left, node.height), emit(*node.right, node.height),
                       length);
  };
  const auto& root = tree.nodes[tree.root];
  if (!root.left) return fmt::format("C{};", tree.root);
  return fmt::format("({},{});", emit(*root.left, root.height), emit(*root.right, root.height));
}

nlohmann::json dendrogram_layout_json(const Dendrogram& tree) {
  nlohmann::json doc;
  doc["branch_length"] = "parent merge height minus child merge height; leaves at height 0";
  doc["leaf_width"] = "proportional to cluster population";
  doc["branch_height"] = "proportional to cluster peak log-density";
  doc["sentinel_height"] = tree.sentinel;
  doc["leaf_order"] = tree.leaf_order;
  auto& leaves = doc["leaves"] = nlohmann::json::array();
  for (const auto& l : tree.layout)
    leaves.push_back({{"cluster", l.cluster}, {"x", l.x}, {"width", l.width},
                      {"branch_height", l.branch_height}});
  auto& nodes = doc["nodes"] = nlohmann::json::array();
  for (std::size_t i = tree.n_leaves; i < tree.nodes.size(); ++i) {
    const auto& nd = tree.nodes[i];
    nodes.push_back({{"id", nd.id}, {"left", *nd.left}, {"right", *nd.right},
                     {"height", nd.height}, {"sentinel", nd.sentinel},
                     {"population", nd.population}});
  }
  return doc;
}

std::vector<std::array<double, 2>> mds_layout(const SquareMatrix& distances) {
  const std::size_t n = distances.size();
  if (n < 2) throw ConfigError("MDS layout needs at least 2 clusters");
  const double sentinel = sentinel_height(distances);

  Eigen::MatrixXd sq(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      double d = i == j ? 0.0 : distances(i, j);
      if (!std::isfinite(d)) d = sentinel;
      sq(i, j) = d * d;
    }
  }
  // B = -1/2 J D^2 J with J the centering matrix.
  const Eigen::VectorXd row_mean = sq.rowwise().mean();
  const Eigen::VectorXd col_mean = sq.colwise().mean().transpose();
  const double grand = sq.mean();
  Eigen::MatrixXd b(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      b(i, j) = -0.5 * (sq(i, j) - row_mean(i) - col_mean(j) + grand);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(b);
  std::vector<std::array<double, 2>> xy(n, {0.0, 0.0});
  for (int axis = 0; axis < 2 && axis < static_cast<int>(n); ++axis) {
    const Eigen::Index col = static_cast<Eigen::Index>(n) - 1 - axis;
    const double lambda = eig.eigenvalues()(col);
    if (!(lambda > 0.0)) continue;
    const double scale = std::sqrt(lambda);
    for (std::size_t i = 0; i < n; ++i) xy[i][axis] = scale * eig.eigenvectors()(i, col);
  }

  // Sign convention: x of cluster 0 non-negative, y of cluster 1 non-negative
  // (later clusters decide when those coordinates vanish).
  for (int axis = 0; axis < 2; ++axis) {
    for (std::size_t i = static_cast<std::size_t>(axis); i < n; ++i) {
      if (xy[i][axis] == 0.0) continue;
      if (xy[i][axis] < 0.0)
        for (auto& p : xy) p[axis] = -p[axis];
      break;
    }
  }
  return xy;
}

Network network_export(const Topography& topo) {
  constexpr double kMaxNodeWidth = 2.0;
  constexpr double kMinPen = 0.5, kMaxPen = 5.0;
  Network net;
  std::size_t total = 0, max_pop = 0;
  for (const auto& c : topo.clusters) {
    total += c.population;
    max_pop = std::max(max_pop, c.population);
  }
  std::vector<std::array<double, 2>> xy;
  if (topo.n_clusters() >= 2) xy = mds_layout(topo.distances);
  for (const auto& c : topo.clusters) {
    NetworkNode node;
    node.id = c.id;
    node.population = c.population;
    node.peak_log_rho = c.peak_log_rho;
    node.suggested_area = total ? static_cast<double>(c.population) / static_cast<double>(total) : 0.0;
    node.width = max_pop ? kMaxNodeWidth * std::sqrt(static_cast<double>(c.population) /
                                                     static_cast<double>(max_pop))
                         : 0.0;
    if (!xy.empty()) node.position = xy[c.id];
    net.nodes.push_back(node);
  }
  if (topo.saddles.empty()) return net;
  auto [lo, hi] = std::minmax_element(topo.saddles.begin(), topo.saddles.end(),
                                      [](const Saddle& x, const Saddle& y) { return x.log_rho < y.log_rho; });
  const double low = lo->log_rho, high = hi->log_rho;
  for (const Saddle& s : topo.saddles) {
    const double t = high > low ? (s.log_rho - low) / (high - low) : 0.5;
    net.edges.push_back({s.a, s.b, s.log_rho, kMinPen + t * (kMaxPen - kMinPen)});
  }
  return net;
}

std::string to_dot(const Network& net) {
  std::string out = "graph topography {\n  node [shape=circle, fixedsize=true];\n";
  for (const auto& n : net.nodes) {
    out += fmt::format("  C{} [label=\"{}\", population={}, peak_log_rho={}, area={}, width={}",
                       n.id, n.id, n.population, n.peak_log_rho, n.suggested_area, n.width);
    if (n.position) out += fmt::format(", pos=\"{},{}!\"", (*n.position)[0], (*n.position)[1]);
    out += "];\n";
  }
  for (const auto& e : net.edges)
    out += fmt::format("  C{} -- C{} [saddle_log_rho={}, penwidth={}];\n", e.a, e.b, e.weight,
                       e.suggested_width);
  out += "}\n";
  return out;
}

namespace {

nlohmann::json matrix_json(const SquareMatrix& m) {
  auto rows = nlohmann::json::array();
  for (std::size_t i = 0; i < m.size(); ++i) {
    auto row = nlohmann::json::array();
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (std::isfinite(m(i, j)))
        row.push_back(m(i, j));
      else
        row.push_back(nullptr);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

SquareMatrix matrix_from_json(const nlohmann::json& rows, double absent) {
  SquareMatrix m(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.size()) throw DataError("topography matrix is not square");
    for (std::size_t j = 0; j < rows.size(); ++j)
      m(i, j) = rows[i][j].is_null() ? absent : rows[i][j].get<double>();
  }
  return m;
}

}  // namespace

nlohmann::json to_json(const Topography& topo) {
  nlohmann::json doc;
  auto& clusters = doc["clusters"] = nlohmann::json::array();
  for (const auto& c : topo.clusters)
    clusters.push_back({{"id", c.id}, {"center", c.center}, {"peak_log_rho", c.peak_log_rho},
                        {"peak_err", c.peak_err}, {"population", c.population}});
  auto& saddles = doc["saddles"] = nlohmann::json::array();
  for (const auto& s : topo.saddles)
    saddles.push_back({{"a", s.a}, {"b", s.b}, {"log_rho", s.log_rho}, {"err", s.err},
                       {"border_point", s.border_point}});
  doc["distances"] = matrix_json(topo.distances);
  doc["matrix"] = matrix_json(topo.saddle_matrix);
  doc["sentinel_height"] = sentinel_height(topo.distances);
  return doc;
}

Topography topography_from_json(const nlohmann::json& doc) {
  try {
    Topography topo;
    for (const auto& c : doc.at("clusters"))
      topo.clusters.push_back({c.at("id").get<ClusterId>(), c.at("center").get<PointId>(),
                               c.at("peak_log_rho").get<double>(), c.at("peak_err").get<double>(),
                               c.at("population").get<std::size_t>()});
    for (const auto& s : doc.at("saddles"))
      topo.saddles.push_back({s.at("a").get<ClusterId>(), s.at("b").get<ClusterId>(),
                              s.at("log_rho").get<double>(), s.at("err").get<double>(),
                              s.at("border_point").get<PointId>()});
    topo.distances = matrix_from_json(doc.at("distances"), kNoContact);
    topo.saddle_matrix = doc.contains("matrix")
                             ? matrix_from_json(doc.at("matrix"), std::numeric_limits<double>::quiet_NaN())
                             : SquareMatrix(topo.clusters.size());
    return topo;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(fmt::format("malformed topography document: {}", e.what()));
  }
}

}  // namespace peaktopo
