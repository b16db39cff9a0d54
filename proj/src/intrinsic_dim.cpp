#include "peaktopo/intrinsic_dim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>
#include <fmt/format.h>

#include "peaktopo/errors.hpp"

namespace peaktopo {

IdEstimate twonn_from_ratios(std::span<const double> mu, double discard_fraction) {
  if (!(discard_fraction >= 0.0 && discard_fraction < 1.0))
    throw ConfigError(fmt::format("discard fraction {} not in [0, 1)", discard_fraction));
  if (mu.empty()) throw DataError("TWO-NN: no usable points (every r1 is zero)");

  std::vector<double> log_mu(mu.size());
  std::transform(mu.begin(), mu.end(), log_mu.begin(), [](double m) { return std::log(m); });
  std::sort(log_mu.begin(), log_mu.end());

  const std::size_t n = log_mu.size();
  const auto n_discard = static_cast<std::size_t>(std::floor(discard_fraction * static_cast<double>(n)));
  const std::size_t n_used = std::max<std::size_t>(n - n_discard, 1);

  double sum = 0.0;
  for (std::size_t i = 0; i < n_used; ++i) sum += log_mu[i];
  sum += static_cast<double>(n - n_used) * log_mu[n_used - 1];
  if (!(sum > 0.0)) throw DataError("TWO-NN: sum of log(r2/r1) is zero");

  return {static_cast<double>(n_used) / sum, n_used, 0, discard_fraction};
}

IdEstimate twonn_estimate(const NeighborGraph& graph, double discard_fraction) {
  if (graph.k_max() < 2) throw ConfigError("TWO-NN needs at least 2 neighbors per point");
  std::vector<double> mu;
  mu.reserve(graph.n_points());
  std::size_t skipped = 0;
  for (std::size_t i = 0; i < graph.n_points(); ++i) {
    double r1 = graph.radius(i, 1);
    if (r1 <= 0.0) {
      ++skipped;
      continue;
    }
    mu.push_back(graph.radius(i, 2) / r1);
  }
  if (mu.empty()) throw DataError("TWO-NN: every point has a duplicate at distance zero");
  auto est = twonn_from_ratios(mu, discard_fraction);
  est.n_skipped = skipped;
  return est;
}

}  // namespace peaktopo
