#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "peaktopo/neighbors.hpp"

namespace peaktopo {

/// Chi-squared (1 dof) upper quantile at p = 1e-6.
inline constexpr double kLrtThreshold = 23.928;

/// Coordinate in which the corrected log-density is linear.
enum class LinearAnsatz {
  kVolume,  ///< log rho = b + a * V_{i,l}
  kIndex,   ///< log rho = b + a * l
};

std::string_view to_string(LinearAnsatz ansatz);
LinearAnsatz parse_linear_ansatz(std::string_view name);

/// Volume of the unit ball in real dimension d: pi^(d/2) / Gamma(d/2 + 1).
double unit_ball_volume(double d);

struct DensityConfig {
  double d = 2.0;
  double omega = 3.14159265358979323846;
  double d_thr = kLrtThreshold;
  std::size_t k_min = 4;
  std::size_t k_max_cap = 0;  ///< 0: min(graph k_max, n / 4)
  double nr_tol = 1e-8;
  std::size_t nr_max_iter = 100;
  LinearAnsatz ansatz = LinearAnsatz::kVolume;

  /// Defaults for intrinsic dimension d, omega set to the unit-ball volume.
  static DensityConfig for_dimension(double d);

  void validate() const;
  /// The adaptive-k ceiling actually used on `graph`.
  std::size_t resolve_cap(const NeighborGraph& graph) const;
};

/// sqrt((4k + 2) / ((k - 1) k)), the error on log rho for k > 1.
double log_density_error(std::size_t k_hat);

/// Shell volumes v_{i,l} = omega (r_l^d - r_{l-1}^d), l = 1..k, with r_0 = 0.
std::vector<double> shell_volumes(const NeighborGraph& graph, std::size_t i, std::size_t k, double d,
                                  double omega);

/// Log-likelihood of k exponential shells of total volume V at density rho.
double shell_log_likelihood(std::size_t k, double volume, double rho);

/// log(k / V), the maximizer of shell_log_likelihood. Throws DataError when V <= 0.
double knn_mle(std::size_t k, double volume);

/// Likelihood-ratio statistic comparing separate densities at two points
/// (each with k shells of total volume v_i, v_j) against one shared density.
/// +inf when either volume is zero.
double lrt_statistic(std::size_t k, double v_i, double v_j);
double lrt_statistic(std::size_t i, std::size_t k, const NeighborGraph& graph,
                     const DensityConfig& config);

std::size_t adaptive_k(std::size_t i, const NeighborGraph& graph, const DensityConfig& config);

struct LinearFit {
  double log_rho = 0.0;  ///< intercept b
  double slope = 0.0;    ///< a
  double grad_norm = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

/// Maximizes sum_l [(b + a x_l) - v_l exp(b + a x_l)] by damped Newton-Raphson
/// from (log(k / sum v), 0). `shells` are the v_l and `x` the ansatz coordinate.
/// Convergence is tested on the gradient with respect to (b, a * max x).
LinearFit fit_linear_shells(std::span<const double> shells, std::span<const double> x,
                            double tol = 1e-8, std::size_t max_iter = 100);

struct PointDensity {
  std::size_t k_hat = 0;
  double log_rho = 0.0;
  double err = 0.0;
  double r_khat = 0.0;
  double slope = 0.0;
  bool fallback = false;
};

PointDensity fit_linear_corrected(std::size_t i, std::size_t k_hat, const NeighborGraph& graph,
                                  const DensityConfig& config);

struct DensityEstimate {
  std::vector<std::size_t> k_hat;
  std::vector<double> log_rho;
  std::vector<double> err;
  std::vector<double> r_khat;
  std::vector<double> slope;
  std::vector<bool> fallback;

  std::size_t size() const { return log_rho.size(); }
  void resize(std::size_t n);
  void set(std::size_t i, const PointDensity& p);
};

DensityEstimate estimate_density(const NeighborGraph& graph, const DensityConfig& config);

/// TSV with header `point_id k_hat log_rho err r_khat fallback`.
void write_density_tsv(std::ostream& out, const DensityEstimate& estimate);
DensityEstimate read_density_tsv(std::istream& in, const std::string& source = "<stream>");
DensityEstimate read_density_tsv(const std::filesystem::path& path);

}  // namespace peaktopo
