#pragma once

#include <optional>
#include <vector>

#include "adapool/activation_map.h"
#include "adapool/geometry.h"
#include "adapool/pool.h"

namespace adapool {

// Copies each pooled value to every position of its region. Requires
// stride == kernel and no padding. Rows/columns left over by the floor in
// the output formula take the value of the nearest region.
ActivationMap nearest_inflate(const ActivationMap& pooled,
                              const PoolGeometry& geometry,
                              const std::vector<std::size_t>& target_spatial);

// Linear interpolation between region centres, clamped at the borders.
// Same geometry requirements as nearest_inflate.
ActivationMap bilinear_inflate(const ActivationMap& pooled,
                               const PoolGeometry& geometry,
                               const std::vector<std::size_t>& target_spatial);

struct UnpoolInput {
  ActivationMap pooled;
  WeightMasks masks;
  // Absent means eM-only masks (beta = 0) or eDSC-only masks (beta = 1).
  std::optional<BetaMap> beta;
  std::vector<std::size_t> target_spatial;
};

struct UnpoolOptions {
  // Apply a second softmax to the stored eDSC weights before use.
  bool double_softmax = false;
};

// out_i = [beta w_dsc,i + (1 - beta) w_em,i] * pooled(region). Each region's
// outputs sum to its pooled value. Positions outside every region copy the
// nearest regional position.
ActivationMap ada_unpool(const UnpoolInput& input,
                         const UnpoolOptions& options = {});

// Convenience: unpool a pool_ada / pool_em / pool_edscw result to its input
// resolution.
ActivationMap ada_unpool(const PoolResult& pooled,
                         const UnpoolOptions& options = {});

}  // namespace adapool
