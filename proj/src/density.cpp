#include "peaktopo/density.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"

namespace peaktopo {

std::string_view to_string(LinearAnsatz ansatz) {
  return ansatz == LinearAnsatz::kVolume ? "volume" : "index";
}

LinearAnsatz parse_linear_ansatz(std::string_view name) {
  if (name == "volume") return LinearAnsatz::kVolume;
  if (name == "index") return LinearAnsatz::kIndex;
  throw ConfigError(fmt::format("unknown linear ansatz '{}'", name));
}

double unit_ball_volume(double d) {
  return std::exp(0.5 * d * std::log(std::numbers::pi) - std::lgamma(0.5 * d + 1.0));
}

DensityConfig DensityConfig::for_dimension(double d) {
  DensityConfig cfg;
  cfg.d = d;
  cfg.omega = unit_ball_volume(d);
  return cfg;
}

void DensityConfig::validate() const {
  if (!(d > 0.0) || !std::isfinite(d))
    throw ConfigError(fmt::format("intrinsic dimension must be positive, got {}", d));
  if (!(omega > 0.0) || !std::isfinite(omega))
    throw ConfigError(fmt::format("omega must be positive, got {}", omega));
  if (!(d_thr > 0.0)) throw ConfigError("LRT threshold must be positive");
  if (k_min < 3) throw ConfigError(fmt::format("k_min must be >= 3, got {}", k_min));
  if (!(nr_tol > 0.0)) throw ConfigError("Newton-Raphson tolerance must be positive");
  if (nr_max_iter == 0) throw ConfigError("Newton-Raphson iteration limit must be positive");
}

std::size_t DensityConfig::resolve_cap(const NeighborGraph& graph) const {
  if (graph.k_max() < k_min)
    throw ConfigError(fmt::format("graph k_max = {} is below k_min = {}", graph.k_max(), k_min));
  std::size_t cap = k_max_cap != 0 ? k_max_cap : graph.n_points() / 4;
  cap = std::min(cap, graph.k_max());
  return std::max(cap, k_min);
}

double log_density_error(std::size_t k_hat) {
  const auto k = static_cast<double>(k_hat);
  return std::sqrt((4.0 * k + 2.0) / ((k - 1.0) * k));
}

std::vector<double> shell_volumes(const NeighborGraph& graph, std::size_t i, std::size_t k, double d,
                                  double omega) {
  std::vector<double> v(k);
  double prev = 0.0;
  for (std::size_t l = 1; l <= k; ++l) {
    double cur = std::pow(graph.radius(i, l), d);
    v[l - 1] = omega * (cur - prev);
    prev = cur;
  }
  return v;
}

double shell_log_likelihood(std::size_t k, double volume, double rho) {
  return static_cast<double>(k) * std::log(rho) - rho * volume;
}

double knn_mle(std::size_t k, double volume) {
  if (!(volume > 0.0))
    throw DataError(fmt::format("degenerate neighborhood: volume of {} neighbors is zero", k));
  return std::log(static_cast<double>(k) / volume);
}

double lrt_statistic(std::size_t k, double v_i, double v_j) {
  if (!(v_i > 0.0) || !(v_j > 0.0)) return std::numeric_limits<double>::infinity();
  // 2k [2 log((v_i + v_j) / 2) - log v_i - log v_j] written as -2k log(1 - t^2).
  const double t = (v_i - v_j) / (v_i + v_j);
  return -2.0 * static_cast<double>(k) * std::log1p(-t * t);
}

namespace {

double ball_volume(const NeighborGraph& graph, std::size_t i, std::size_t l,
                   const DensityConfig& cfg) {
  return cfg.omega * std::pow(graph.radius(i, l), cfg.d);
}

}  // namespace

double lrt_statistic(std::size_t i, std::size_t k, const NeighborGraph& graph,
                     const DensityConfig& config) {
  const std::size_t j = graph.neighbor(i, k);
  return lrt_statistic(k, ball_volume(graph, i, k, config), ball_volume(graph, j, k, config));
}

std::size_t adaptive_k(std::size_t i, const NeighborGraph& graph, const DensityConfig& config) {
  const std::size_t cap = config.resolve_cap(graph);
  for (std::size_t k = config.k_min; k <= cap; ++k) {
    if (lrt_statistic(i, k, graph, config) > config.d_thr) return std::max(k - 1, config.k_min);
  }
  return cap;
}

namespace {

struct ShellSums {
  double objective = 0.0;
  double g0 = 0.0, g1 = 0.0;           // gradient in (b, a_scaled)
  double h00 = 0.0, h01 = 0.0, h11 = 0.0;  // negated Hessian
};

ShellSums evaluate(std::span<const double> v, std::span<const double> s, double b, double a) {
  ShellSums out;
  for (std::size_t l = 0; l < v.size(); ++l) {
    const double eta = b + a * s[l];
    const double e = v[l] * std::exp(eta);
    out.objective += eta - e;
    out.g0 += 1.0 - e;
    out.g1 += s[l] * (1.0 - e);
    out.h00 += e;
    out.h01 += s[l] * e;
    out.h11 += s[l] * s[l] * e;
  }
  return out;
}

}  // namespace

LinearFit fit_linear_shells(std::span<const double> shells, std::span<const double> x, double tol,
                            std::size_t max_iter) {
  const std::size_t k = shells.size();
  LinearFit fit;
  double total = 0.0;
  for (double v : shells) total += v;
  if (k == 0 || x.size() != k || !(total > 0.0)) return fit;

  // Work with s = x / x_max so both parameters are O(1); a = a_scaled / x_max.
  double x_scale = 0.0;
  for (double xi : x) x_scale = std::max(x_scale, std::abs(xi));
  if (!(x_scale > 0.0)) return fit;
  std::vector<double> s(k);
  for (std::size_t l = 0; l < k; ++l) s[l] = x[l] / x_scale;

  double b = std::log(static_cast<double>(k) / total);
  double a = 0.0;
  ShellSums cur = evaluate(shells, s, b, a);
  // Stationarity is measured in the scaled parametrization, which makes the
  // test invariant to the unit of length.
  auto grad_norm = [](const ShellSums& e) { return std::hypot(e.g0, e.g1); };

  for (std::size_t iter = 0;; ++iter) {
    fit.iterations = iter;
    fit.grad_norm = grad_norm(cur);
    if (fit.grad_norm <= tol) {
      fit.converged = true;
      // One more full Newton step; near the optimum it squares the gradient.
      const double det = cur.h00 * cur.h11 - cur.h01 * cur.h01;
      if (cur.h00 > 0.0 && det > 0.0) {
        const double pb = b + (cur.h11 * cur.g0 - cur.h01 * cur.g1) / det;
        const double pa = a + (cur.h00 * cur.g1 - cur.h01 * cur.g0) / det;
        const ShellSums polished = evaluate(shells, s, pb, pa);
        if (std::isfinite(polished.objective) && grad_norm(polished) < fit.grad_norm) {
          b = pb;
          a = pa;
          fit.grad_norm = grad_norm(polished);
        }
      }
      break;
    }
    if (iter == max_iter) break;
    const double det = cur.h00 * cur.h11 - cur.h01 * cur.h01;
    if (!(cur.h00 > 0.0) || !(det > 0.0)) break;  // Hessian not negative definite
    const double db = (cur.h11 * cur.g0 - cur.h01 * cur.g1) / det;
    const double da = (cur.h00 * cur.g1 - cur.h01 * cur.g0) / det;

    double step = 1.0;
    ShellSums next;
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, step *= 0.5) {
      next = evaluate(shells, s, b + step * db, a + step * da);
      if (std::isfinite(next.objective) &&
          next.objective >= cur.objective - 1e-13 * (1.0 + std::abs(cur.objective))) {
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    const double nb = b + step * db;
    const double na = a + step * da;
    if (nb == b && na == a) break;  // step below machine resolution
    b = nb;
    a = na;
    cur = next;
  }
  fit.log_rho = b;
  fit.slope = a / x_scale;
  return fit;
}

PointDensity fit_linear_corrected(std::size_t i, std::size_t k_hat, const NeighborGraph& graph,
                                  const DensityConfig& config) {
  PointDensity out;
  out.k_hat = k_hat;
  out.err = log_density_error(k_hat);
  out.r_khat = graph.radius(i, k_hat);

  const auto shells = shell_volumes(graph, i, k_hat, config.d, config.omega);
  std::vector<double> x(k_hat);
  double cumulative = 0.0;
  for (std::size_t l = 0; l < k_hat; ++l) {
    cumulative += shells[l];
    x[l] = config.ansatz == LinearAnsatz::kVolume ? config.omega * std::pow(graph.radius(i, l + 1), config.d)
                                                   : static_cast<double>(l + 1);
  }

  if (cumulative > 0.0) {
    LinearFit fit = fit_linear_shells(shells, x, config.nr_tol, config.nr_max_iter);
    if (fit.converged && std::isfinite(fit.log_rho)) {
      out.log_rho = fit.log_rho;
      out.slope = fit.slope;
      return out;
    }
    out.fallback = true;
    out.log_rho = knn_mle(k_hat, ball_volume(graph, i, k_hat, config));
    return out;
  }

  // Every neighbor up to k_hat coincides with i: use the first non-zero ball.
  out.fallback = true;
  for (std::size_t k = k_hat + 1; k <= graph.k_max(); ++k) {
    double volume = ball_volume(graph, i, k, config);
    if (volume > 0.0) {
      out.log_rho = knn_mle(k, volume);
      return out;
    }
  }
  throw DataError(fmt::format("point {}: all {} neighbors coincide with it", i, graph.k_max()));
}

void DensityEstimate::resize(std::size_t n) {
  k_hat.assign(n, 0);
  log_rho.assign(n, 0.0);
  err.assign(n, 0.0);
  r_khat.assign(n, 0.0);
  slope.assign(n, 0.0);
  fallback.assign(n, false);
}

void DensityEstimate::set(std::size_t i, const PointDensity& p) {
  k_hat[i] = p.k_hat;
  log_rho[i] = p.log_rho;
  err[i] = p.err;
  r_khat[i] = p.r_khat;
  slope[i] = p.slope;
  fallback[i] = p.fallback;
}

DensityEstimate estimate_density(const NeighborGraph& graph, const DensityConfig& config) {
  config.validate();
  config.resolve_cap(graph);
  DensityEstimate est;
  est.resize(graph.n_points());
  for (std::size_t i = 0; i < graph.n_points(); ++i) {
    const std::size_t k_hat = adaptive_k(i, graph, config);
    est.set(i, fit_linear_corrected(i, k_hat, graph, config));
  }
  return est;
}

void write_density_tsv(std::ostream& out, const DensityEstimate& estimate) {
  out << "point_id\tk_hat\tlog_rho\terr\tr_khat\tfallback\n";
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    out << fmt::format("{}\t{}\t{}\t{}\t{}\t{}\n", i, estimate.k_hat[i], estimate.log_rho[i],
                       estimate.err[i], estimate.r_khat[i], estimate.fallback[i] ? 1 : 0);
  }
}

namespace {

template <typename T>
T parse_number(std::string_view field, const std::string& source, std::size_t line_no) {
  T value{};
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc() || ptr != field.data() + field.size())
    throw DataError(fmt::format("{}:{}: cannot parse '{}'", source, line_no, field));
  return value;
}

}  // namespace

DensityEstimate read_density_tsv(std::istream& in, const std::string& source) {
  DensityEstimate est;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line.starts_with("point_id") || line.front() == '#') continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      auto tab = rest.find('\t');
      f.push_back(rest.substr(0, tab));
      if (tab == std::string_view::npos) break;
      rest.remove_prefix(tab + 1);
    }
    if (f.size() != 6)
      throw DataError(fmt::format("{}:{}: expected 6 columns, found {}", source, line_no, f.size()));
    const auto id = parse_number<std::size_t>(f[0], source, line_no);
    if (id != est.size())
      throw DataError(fmt::format("{}:{}: expected point {}, found {}", source, line_no, est.size(), id));
    est.k_hat.push_back(parse_number<std::size_t>(f[1], source, line_no));
    est.log_rho.push_back(parse_number<double>(f[2], source, line_no));
    est.err.push_back(parse_number<double>(f[3], source, line_no));
    est.r_khat.push_back(parse_number<double>(f[4], source, line_no));
    est.slope.push_back(0.0);
    est.fallback.push_back(parse_number<int>(f[5], source, line_no) != 0);
  }
  if (est.size() == 0) throw DataError(fmt::format("{}: empty density file", source));
  return est;
}

DensityEstimate read_density_tsv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError(fmt::format("cannot open '{}'", path.string()));
  return read_density_tsv(in, path.string());
}

}  // namespace peaktopo
