#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "peaktopo/metrics.hpp"
#include "peaktopo/neighbors.hpp"

namespace peaktopo {

struct LabeledPoints {
  PointSet points;
  std::vector<Label> labels;
};

struct GmmSample {
  PointSet points;
  std::vector<Label> labels;
  PointSet means;
  double sigma = 1.0;
};

/// Equal-weight isotropic Gaussian mixture (sigma = 1) whose means are at
/// least `separation` apart. Point i belongs to component i mod k.
GmmSample synth_gmm(std::size_t k, std::size_t n, std::size_t dim, double separation,
                    std::uint64_t seed);

/// Two interleaved Archimedean spirals r = kSpiralPitch * theta, the second
/// rotated by pi, with theta uniform in [pi/2, 5 pi/2] (one full turn) and
/// Gaussian radial noise. Points alternate between the spirals; labels are 0 and 1.
LabeledPoints synth_spirals(std::size_t n, double noise, std::uint64_t seed);

inline constexpr double kSpiralThetaMin = 1.5707963267948966;
inline constexpr double kSpiralThetaMax = 7.853981633974483;
inline constexpr double kSpiralPitch = 0.25;

/// Uniform in the unit hypercube.
PointSet synth_uniform(std::size_t n, std::size_t dim, std::uint64_t seed);

}  // namespace peaktopo
