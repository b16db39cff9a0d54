#include "peaktopo/synth.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"

namespace peaktopo {

GmmSample synth_gmm(std::size_t k, std::size_t n, std::size_t dim, double separation,
                    std::uint64_t seed) {
  if (k == 0 || n < k) throw ConfigError(fmt::format("GMM needs 1 <= k <= n (k = {}, n = {})", k, n));
  if (dim == 0) throw ConfigError("GMM dimension must be positive");
  if (!(separation >= 0.0)) throw ConfigError("GMM separation must be non-negative");

  std::mt19937_64 rng(seed);
  GmmSample out;
  out.sigma = 1.0;
  out.means = PointSet(k, dim);

  // Box wide enough that rejection sampling succeeds quickly.
  const double per_axis = std::ceil(std::pow(static_cast<double>(k), 1.0 / static_cast<double>(dim)));
  const double side = std::max(1.0, 2.0 * separation * per_axis);
  std::uniform_real_distribution<double> box(0.0, side);
  constexpr std::size_t kMaxAttempts = 100000;
  for (std::size_t c = 0; c < k; ++c) {
    bool placed = false;
    for (std::size_t attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
      auto m = out.means.row(c);
      for (auto& x : m) x = box(rng);
      placed = true;
      for (std::size_t o = 0; o < c && placed; ++o)
        placed = distance(m, out.means.row(o), Metric::kEuclidean) >= separation * out.sigma;
    }
    if (!placed)
      throw DataError(fmt::format("could not place {} means at separation {}", k, separation));
  }

  out.points = PointSet(n, dim);
  out.labels.resize(n);
  std::normal_distribution<double> gauss(0.0, out.sigma);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i % k;
    out.labels[i] = static_cast<Label>(c);
    auto row = out.points.row(i);
    auto mean = out.means.row(c);
    for (std::size_t a = 0; a < dim; ++a) row[a] = mean[a] + gauss(rng);
  }
  return out;
}

LabeledPoints synth_spirals(std::size_t n, double noise, std::uint64_t seed) {
  if (n == 0 || n % 2 != 0) throw ConfigError(fmt::format("spirals need an even n, got {}", n));
  if (!(noise >= 0.0)) throw ConfigError("spiral noise must be non-negative");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> theta_dist(kSpiralThetaMin, kSpiralThetaMax);
  std::normal_distribution<double> gauss(0.0, 1.0);
  LabeledPoints out{PointSet(n, 2), std::vector<Label>(n)};
  for (std::size_t i = 0; i < n; ++i) {
    const Label arm = static_cast<Label>(i % 2);
    const double theta = theta_dist(rng);
    const double r = kSpiralPitch * theta + (noise > 0.0 ? noise * gauss(rng) : 0.0);
    const double phase = theta + (arm == 1 ? std::numbers::pi : 0.0);
    out.points.row(i)[0] = r * std::cos(phase);
    out.points.row(i)[1] = r * std::sin(phase);
    out.labels[i] = arm;
  }
  return out;
}

PointSet synth_uniform(std::size_t n, std::size_t dim, std::uint64_t seed) {
  if (n < 2) throw ConfigError("uniform sample needs at least 2 points");
  if (dim == 0) throw ConfigError("uniform sample dimension must be positive");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointSet out(n, dim);
  for (auto& x : out.coords) x = unit(rng);
  return out;
}

}  // namespace peaktopo
