#pragma once

#include <cstddef>
#include <vector>

#include "adapool/activation_map.h"
#include "adapool/backward.h"
#include "adapool/geometry.h"
#include "adapool/pool.h"

namespace adapool {

struct FitOptions {
  std::size_t steps = 500;
  double lr = 0.05;
  GradMode mode = GradMode::kExactAnalytic;
  double initial_beta = 0.5;
};

struct FitResult {
  BetaMap beta;
  // MSE between pool_ada(input, beta) and target before each step, followed
  // by the final value: steps + 1 entries.
  std::vector<double> loss;
  // Mean beta at the same points as `loss`.
  std::vector<double> mean_beta;
};

// Projected gradient descent on a per-location beta map. Each beta entry only
// moves its own output location, so the step for entry r uses the gradient of
// that location's channel-mean squared error.
FitResult fit_beta(const ActivationMap& input, const PoolGeometry& geometry,
                   const ActivationMap& target, const FitOptions& options = {});

// Beta minimizing the nearest-inflation round-trip error of `image`. With
// nearest inflation a region's error is n (y - mean)^2 plus a constant, so
// this fits toward average pooling. Runs on values divided by
// `dynamic_range`.
BetaMap fit_reconstruction_beta(const ActivationMap& image,
                                const PoolGeometry& geometry,
                                double dynamic_range, std::size_t steps,
                                double lr);

}  // namespace adapool
