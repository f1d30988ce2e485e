#pragma once

#include <cstdint>
#include <string>

#include "adapool/activation_map.h"
#include "adapool/pool.h"

namespace adapool {

struct SsimOptions {
  double dynamic_range = 255.0;
  std::size_t window = 11;
  double sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
};

// Mean local SSIM over every position where the Gaussian window fits,
// averaged over channels (and frames for 3D maps). Dimensions shorter than
// the window use the largest odd window that fits.
double ssim(const ActivationMap& a, const ActivationMap& b,
            const SsimOptions& options = {});

// 10 log10(max^2 / MSE); +inf when the maps are identical.
double psnr(const ActivationMap& a, const ActivationMap& b,
            double max_value = 255.0);

double mean_squared_error(const ActivationMap& a, const ActivationMap& b);

enum class Inflate { kNearest, kBilinear };

struct QualityScore {
  double ssim = 0.0;
  double psnr_db = 0.0;
  std::string method;
  std::size_t kernel = 0;
};

struct RoundTripOptions {
  Inflate inflate = Inflate::kNearest;
  double dynamic_range = 255.0;
  // Pool on values divided by dynamic_range and scale the result back. The
  // exponential operators are not scale invariant; this matches the [0, 1]
  // input convention of image networks.
  bool unit_range = true;
  // ada:learned fits beta per image toward the reconstruction optimum.
  std::size_t fit_steps = 200;
  double fit_lr = 0.5;
};

// Downsample with stride k, inflate back and compare with the original.
// The image extents must be multiples of k.
QualityScore eval_roundtrip(const ActivationMap& image,
                            const OperatorSpec& spec, std::size_t k,
                            const RoundTripOptions& options = {});

// The pooled result that eval_roundtrip compares (after inflation).
PoolResult roundtrip_pool(const ActivationMap& image, const OperatorSpec& spec,
                          std::size_t k, const RoundTripOptions& options = {});

}  // namespace adapool
