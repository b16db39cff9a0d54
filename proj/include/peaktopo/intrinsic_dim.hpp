#pragma once

#include <cstddef>
#include <span>

#include "peaktopo/neighbors.hpp"

namespace peaktopo {

struct IdEstimate {
  double d_hat = 0.0;
  std::size_t n_used = 0;     ///< ratios entering the sum
  std::size_t n_skipped = 0;  ///< points with r1 = 0
  double discard_fraction = 0.0;
};

/// TWO-NN maximum-likelihood estimate from the ratios mu = r2 / r1.
///
/// The largest `discard_fraction` of the ratios is dropped. Dropped ratios
/// are treated as right-censored at the largest retained value, which keeps
/// the estimator unbiased; with no discard this is n / sum(log mu).
IdEstimate twonn_from_ratios(std::span<const double> mu, double discard_fraction = 0.1);

IdEstimate twonn_estimate(const NeighborGraph& graph, double discard_fraction = 0.1);

}  // namespace peaktopo
