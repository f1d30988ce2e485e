#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "adapool/activation_map.h"
#include "adapool/pool.h"

namespace adapool {

enum class GradMode {
  // Route the output gradient through the forward weights.
  kPaperWeighted,
  // Full derivative of the forward expression, including the softmax and DSC
  // terms.
  kExactAnalytic,
};

GradMode parse_grad_mode(std::string_view name);  // "paper" | "exact"

struct Gradients {
  ActivationMap input;
  // ada with a trainable beta only; one entry per output location.
  std::optional<std::vector<double>> beta;
};

// Gradient of sum(grad_out * output) with respect to the pooled input (and
// beta). grad_out must have the output shape of `saved`.
//
// em / edscw / ada need saved masks and statistics and throw MissingState
// otherwise. The mask-weighted beta gradient is grad_out * (max - mean)
// summed over channels; the exact one uses (eDSCW - eM) instead.
//
// Baselines and IDW route the gradient through `saved.route`; in exact mode
// this is the true derivative for every baseline (with stochastic samples
// held fixed) and is rejected for IDW.
Gradients backward(const PoolResult& saved, const ActivationMap& grad_out,
                   GradMode mode = GradMode::kPaperWeighted);

// Projected step beta <- clamp(beta - lr * grad, 0, 1).
BetaMap update_beta(const BetaMap& beta, std::span<const double> grad,
                    double lr);

}  // namespace adapool
