#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include <boost/multiprecision/cpp_dec_float.hpp>

#include "oracles.hpp"
#include "peaktopo/density.hpp"
#include "peaktopo/errors.hpp"
#include "peaktopo/neighbors.hpp"
#include "peaktopo/synth.hpp"

using namespace peaktopo;
using boost::multiprecision::cpp_dec_float_50;

namespace {

using oracle::golden_max;
using oracle::random_profile;
const auto& eq1 = oracle::shell_likelihood;
const auto& lrt_oracle = oracle::lrt;

constexpr double kPi = std::numbers::pi;

PointSet line(const std::vector<double>& xs) {
  PointSet p(xs.size(), 1);
  p.coords = xs;
  return p;
}

// Graph whose point i lists (i + 1, ..., i + k_max) mod n at the given radii.
NeighborGraph ring_graph(std::size_t n, std::size_t k_max,
                         const std::vector<std::vector<double>>& radii) {
  std::vector<PointId> ids(n * k_max);
  std::vector<double> dists(n * k_max);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t l = 0; l < k_max; ++l) {
      ids[i * k_max + l] = static_cast<PointId>((i + l + 1) % n);
      dists[i * k_max + l] = radii[i][l];
    }
  return NeighborGraph(n, k_max, std::move(ids), std::move(dists), "synthetic");
}

// Radii in 2-D for cumulative volumes V_l (omega = pi).
std::vector<double> radii_for_volumes(const std::vector<double>& volumes) {
  std::vector<double> r;
  for (double v : volumes) r.push_back(std::sqrt(v / kPi));
  return r;
}

std::size_t adaptive_k_oracle(std::size_t i, const NeighborGraph& g, double d, double omega,
                              std::size_t cap) {
  for (std::size_t k = 4; k <= cap; ++k) {
    const double vi = omega * std::pow(g.radius(i, k), d);
    const double vj = omega * std::pow(g.radius(g.neighbor(i, k), k), d);
    if (lrt_oracle(k, vi, vj) > kLrtThreshold) return std::max<std::size_t>(k - 1, 4);
  }
  return cap;
}

}  // namespace

TEST_CASE("shell volumes") {
  const auto g2 = build_neighbor_graph(line({0, 1, -2}), 2, Metric::kEuclidean);
  const auto v2 = shell_volumes(g2, 0, 2, 2.0, kPi);
  CHECK(v2[0] == doctest::Approx(kPi).epsilon(1e-15));
  CHECK(v2[1] == doctest::Approx(3 * kPi).epsilon(1e-15));

  const auto g3 = build_neighbor_graph(line({0, 1, -2, 3}), 3, Metric::kEuclidean);
  const auto v3 = shell_volumes(g3, 0, 3, 3.0, 4 * kPi / 3);
  CHECK(v3[0] + v3[1] + v3[2] == doctest::Approx(36 * kPi).epsilon(1e-14));

  const auto gd = build_neighbor_graph(line({0, 1, 1, 5}), 3, Metric::kEuclidean);
  const auto vd = shell_volumes(gd, 0, 3, 2.0, kPi);
  CHECK(vd[1] == 0.0);
  for (double v : vd) CHECK(v >= 0.0);
}

TEST_CASE("unit ball volume") {
  CHECK(unit_ball_volume(1.0) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(unit_ball_volume(2.0) == doctest::Approx(kPi).epsilon(1e-14));
  CHECK(unit_ball_volume(3.0) == doctest::Approx(4 * kPi / 3).epsilon(1e-14));
}

TEST_CASE("knn mle") {
  CHECK(knn_mle(4, 2.0) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
  CHECK(knn_mle(1, 1.0) == 0.0);
  CHECK_THROWS_AS(knn_mle(3, 0.0), DataError);

  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> kd(1, 500);
  std::uniform_real_distribution<double> lv(-8.0, 8.0);
  for (int t = 0; t < 200; ++t) {
    const std::size_t k = kd(rng);
    const double v = std::exp(lv(rng));
    const double best = oracle::knn_argmax(k, v);
    CHECK(std::abs(knn_mle(k, v) - best) <= 1e-9);
  }
}

TEST_CASE("knn mle dominates the likelihood") {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> kd(1, 500);
  std::uniform_real_distribution<double> lv(-6.0, 6.0);
  std::uniform_real_distribution<double> lr(-12.0, 12.0);
  int violations = 0;
  for (int inst = 0; inst < 1000; ++inst) {
    const std::size_t k = kd(rng);
    const double v = std::exp(lv(rng));
    const double at_mle = shell_log_likelihood(k, v, std::exp(knn_mle(k, v)));
    for (int r = 0; r < 100; ++r)
      if (shell_log_likelihood(k, v, std::exp(lr(rng))) > at_mle) ++violations;
  }
  CHECK(violations == 0);
}

TEST_CASE("lrt statistic") {
  CHECK(lrt_statistic(7, 3.5, 3.5) == 0.0);
  const double d = lrt_statistic(10, 1.0, 2.0);
  // 2 [10 log 10 + 10 log 5 - 20 log(20/3)] in 50-digit arithmetic.
  const cpp_dec_float_50 ten(10), five(5), twenty(20), three(3);
  const cpp_dec_float_50 exact =
      2 * (ten * log(ten) + ten * log(five) - twenty * log(twenty / three));
  CHECK(d == doctest::Approx(exact.convert_to<double>()).epsilon(1e-13));
  CHECK(d == doctest::Approx(2.3556604).epsilon(1e-7));
  CHECK(lrt_statistic(10, 2.0, 1.0) == d);
  CHECK(std::isinf(lrt_statistic(5, 0.0, 1.0)));

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> lv(-5.0, 5.0);
  for (int t = 0; t < 500; ++t) {
    const double a = std::exp(lv(rng)), b = std::exp(lv(rng));
    const double s = lrt_statistic(20, a, b);
    CHECK(s >= 0.0);
    CHECK(s == doctest::Approx(lrt_oracle(20, a, b)).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("error closed form") {
  CHECK(log_density_error(2) == doctest::Approx(2.2360679775).epsilon(1e-10));
  CHECK(std::abs(log_density_error(100) - 0.20150945537631876) <= 1e-9);
  CHECK(std::abs(log_density_error(2) - std::sqrt(5.0)) <= 1e-9);
  for (std::size_t k = 2; k <= 1000; ++k) {
    CHECK(log_density_error(k) ==
          std::sqrt((4.0 * k + 2.0) / ((static_cast<double>(k) - 1.0) * k)));
    if (k > 2) CHECK(log_density_error(k) < log_density_error(k - 1));
  }
}

TEST_CASE("constant density grows to the cap") {
  const std::size_t n = 200, kmax = 60;
  std::vector<double> volumes;
  for (std::size_t l = 1; l <= kmax; ++l) volumes.push_back(static_cast<double>(l) / 50.0);
  const auto g = ring_graph(n, kmax, std::vector(n, radii_for_volumes(volumes)));
  const auto cfg = DensityConfig::for_dimension(2.0);
  CHECK(cfg.resolve_cap(g) == 50);
  for (std::size_t i = 0; i < n; i += 17) CHECK(adaptive_k(i, g, cfg) == 50);
}

TEST_CASE("sharp density drop stops the scan") {
  const std::size_t n = 200, kmax = 60;
  std::vector<double> uniform, step;
  for (std::size_t l = 1; l <= kmax; ++l) {
    uniform.push_back(static_cast<double>(l));
    step.push_back(l <= 20 ? static_cast<double>(l) : 20.0 + 100.0 * (l - 20.0));
  }
  std::vector<std::vector<double>> radii(n, radii_for_volumes(uniform));
  radii[0] = radii_for_volumes(step);
  const auto g = ring_graph(n, kmax, radii);
  const auto cfg = DensityConfig::for_dimension(2.0);
  const std::size_t k_hat = adaptive_k(0, g, cfg);
  CHECK(k_hat <= 25);
  CHECK(k_hat == adaptive_k_oracle(0, g, 2.0, kPi, 50));
}

TEST_CASE("adaptive k matches the likelihood-ratio oracle on a mixture") {
  const auto sample = synth_gmm(3, 1500, 2, 4.0, 5);
  const auto g = build_neighbor_graph(sample.points, 200, Metric::kEuclidean);
  const auto cfg = DensityConfig::for_dimension(2.0);
  std::vector<std::size_t> seen;
  for (std::size_t i = 0; i < g.n_points(); ++i) {
    const std::size_t k = adaptive_k(i, g, cfg);
    CHECK(k == adaptive_k_oracle(i, g, 2.0, cfg.omega, cfg.resolve_cap(g)));
    seen.push_back(k);
  }
  std::sort(seen.begin(), seen.end());
  CHECK(seen.front() < seen.back());
}

TEST_CASE("linear fit on equal shells reduces to the knn estimate") {
  for (std::size_t k : {5u, 30u, 200u}) {
    std::vector<double> v(k, 0.25), x;
    double cum = 0.0;
    for (double s : v) x.push_back(cum += s);
    const auto fit = fit_linear_shells(v, x);
    CHECK(fit.converged);
    CHECK(std::abs(fit.slope) <= 1e-8);
    CHECK(fit.log_rho == doctest::Approx(std::log(k / cum)).epsilon(1e-8).scale(1.0));
  }
}

TEST_CASE("linear fit matches a grid-search oracle") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_profile(rng);
    const auto fit = fit_linear_shells(p.v, p.x);
    REQUIRE(fit.converged);

    const auto [b_star, a_star] = oracle::grid_fit(p);
    CHECK(fit.slope == doctest::Approx(a_star).epsilon(1e-6).scale(1.0));
    CHECK(fit.log_rho == doctest::Approx(b_star).epsilon(1e-6).scale(1.0));

    CHECK(oracle::linear_gradient(p, fit.log_rho, fit.slope) <= 1e-8);
    CHECK(fit.grad_norm <= 1e-8);
  }
}

TEST_CASE("coincident neighborhoods fall back") {
  PointSet p(8, 1);
  p.coords = {0, 0, 0, 0, 0, 0, 1, 2};
  const auto g = build_neighbor_graph(p, 7, Metric::kEuclidean);
  auto cfg = DensityConfig::for_dimension(1.0);
  const auto r = fit_linear_corrected(0, 4, g, cfg);
  CHECK(r.fallback);
  CHECK(std::isfinite(r.log_rho));
}

TEST_CASE("uniform square density") {
  const std::size_t n = 10000;
  const auto p = synth_uniform(n, 2, 13);
  const auto g = build_neighbor_graph(p, default_k_max(n), Metric::kEuclidean);
  const auto est = estimate_density(g, DensityConfig::for_dimension(2.0));
  std::size_t interior = 0, good = 0;
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(est.err[i] == log_density_error(est.k_hat[i]));
    const double x = p.row(i)[0], y = p.row(i)[1];
    const double wall = std::min({x, 1.0 - x, y, 1.0 - y});
    if (est.r_khat[i] > wall) continue;
    ++interior;
    if (std::abs(est.log_rho[i] - std::log(static_cast<double>(n))) <= 3.0 * est.err[i]) ++good;
  }
  REQUIRE(interior > 1000);
  CHECK(static_cast<double>(good) >= 0.95 * static_cast<double>(interior));
}

TEST_CASE("permutation equivariance") {
  const auto sample = synth_gmm(2, 800, 2, 6.0, 8);
  const std::size_t n = sample.points.n_points;
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(3));
  PointSet q(n, 2);
  for (std::size_t i = 0; i < n; ++i)
    std::copy(sample.points.row(perm[i]).begin(), sample.points.row(perm[i]).end(),
              q.row(i).begin());
  const auto cfg = DensityConfig::for_dimension(2.0);
  const auto a = estimate_density(build_neighbor_graph(sample.points, 200, Metric::kEuclidean), cfg);
  const auto b = estimate_density(build_neighbor_graph(q, 200, Metric::kEuclidean), cfg);
  for (std::size_t i = 0; i < n; ++i) {
    CHECK(b.k_hat[i] == a.k_hat[perm[i]]);
    CHECK(b.log_rho[i] == a.log_rho[perm[i]]);
  }
}

TEST_CASE("scaling distances shifts log density uniformly") {
  const auto sample = synth_gmm(2, 600, 2, 6.0, 9);
  PointSet q = sample.points;
  const double c = 2.0;
  for (auto& x : q.coords) x *= c;
  const auto cfg = DensityConfig::for_dimension(2.0);
  const auto a = estimate_density(build_neighbor_graph(sample.points, 150, Metric::kEuclidean), cfg);
  const auto b = estimate_density(build_neighbor_graph(q, 150, Metric::kEuclidean), cfg);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(b.k_hat[i] == a.k_hat[i]);
    CHECK(b.log_rho[i] - a.log_rho[i] == doctest::Approx(-2.0 * std::log(c)).epsilon(1e-9));
  }
}

TEST_CASE("index ansatz and config validation") {
  auto cfg = DensityConfig::for_dimension(2.0);
  cfg.ansatz = LinearAnsatz::kIndex;
  const auto p = synth_uniform(500, 2, 4);
  const auto est = estimate_density(build_neighbor_graph(p, 100, Metric::kEuclidean), cfg);
  for (std::size_t i = 0; i < est.size(); ++i) CHECK(std::isfinite(est.log_rho[i]));
  cfg.k_min = 2;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
  CHECK_THROWS_AS(parse_linear_ansatz("radius"), ConfigError);
}

TEST_CASE("density file round trip") {
  const auto p = synth_uniform(300, 2, 6);
  const auto est =
      estimate_density(build_neighbor_graph(p, 60, Metric::kEuclidean), DensityConfig::for_dimension(2.0));
  std::stringstream s;
  write_density_tsv(s, est);
  const auto back = read_density_tsv(s);
  CHECK(back.k_hat == est.k_hat);
  CHECK(back.log_rho == est.log_rho);
  CHECK(back.err == est.err);
  CHECK(back.r_khat == est.r_khat);
  CHECK(back.fallback == est.fallback);
}
