#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adapool/activation_map.h"
#include "adapool/geometry.h"
#include "adapool/measures.h"

namespace adapool {

enum class Method {
  kAverage,
  kMaximum,
  kSum,
  kPowAverage,
  kStochastic,
  kS3,
  kIdw,
  kEm,
  kEdscw,
  kAda,
};

// A pooling operator plus its parameters, as named on the command line:
// avg, max, sum, powavg:<rho>, stoch, s3, idw:<distance>, em, edscw,
// ada:<beta|learned>.
struct OperatorSpec {
  Method method = Method::kAverage;
  double rho = 1.0;
  std::uint64_t seed = 0;
  DistanceKind distance = DistanceKind::l2();
  double beta = 0.5;
  bool learned_beta = false;

  static OperatorSpec parse(std::string_view name);
  std::string name() const;

  bool is_baseline() const;
  bool stochastic() const {
    return method == Method::kStochastic || method == Method::kS3;
  }
};

// Per-output-location fusion weight in [0, 1].
class BetaMap {
 public:
  BetaMap(std::vector<std::size_t> extents, double value = 0.5,
          bool trainable = true);
  // Throws InvalidArgument if any value lies outside [0, 1].
  BetaMap(std::vector<std::size_t> extents, std::vector<double> values,
          bool trainable = true);

  const std::vector<std::size_t>& extents() const { return extents_; }
  std::size_t size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t r) const { return values_[r]; }
  bool trainable() const { return trainable_; }
  double mean() const;

 private:
  std::vector<std::size_t> extents_;
  std::vector<double> values_;
  bool trainable_ = true;
};

// Normalized exponential weights per region. Slots follow the kernel scan
// order; slots that fall into padding hold 0.
struct WeightMasks {
  PoolGeometry geometry;
  MapShape input_shape;
  std::size_t region_count = 0;
  std::size_t kernel_volume = 0;
  // Softmax of activations, one distribution per channel:
  // [channel][region][slot].
  std::vector<double> em;
  // Softmax of DSC similarity to the region mean, shared by all channels:
  // [region][slot].
  std::vector<double> edsc;

  bool has_em() const { return !em.empty(); }
  bool has_edsc() const { return !edsc.empty(); }

  std::span<const double> em_region(std::size_t c, std::size_t r) const {
    return std::span<const double>(em).subspan(
        (c * region_count + r) * kernel_volume, kernel_volume);
  }
  std::span<const double> edsc_region(std::size_t r) const {
    return std::span<const double>(edsc).subspan(r * kernel_volume,
                                                 kernel_volume);
  }
};

// Per-channel region mean and maximum, [channel][region].
struct RegionStats {
  std::vector<double> mean;
  std::vector<double> max;
};

struct PoolResult {
  Method method = Method::kAverage;
  ActivationMap output;
  PoolGeometry geometry = PoolGeometry::square(1);
  MapShape input_shape;

  // eM / eDSC / ada.
  std::optional<WeightMasks> masks;
  std::optional<RegionStats> stats;
  std::shared_ptr<const ActivationMap> input;

  // ada only.
  std::optional<BetaMap> beta;
  std::optional<ActivationMap> em_output;
  std::optional<ActivationMap> edsc_output;

  // Baselines and IDW: d output / d member used to route gradients,
  // [channel][region][slot].
  std::vector<double> route;

  // Stochastic pooling: (region, channel) pairs whose values were mixed-sign
  // or all zero and were therefore sampled uniformly.
  std::size_t fallback_count = 0;
};

// average, maximum, sum, pow_average(rho), stochastic(seed), s3(seed).
PoolResult pool_baseline(const OperatorSpec& spec, const ActivationMap& map,
                         const PoolGeometry& geometry);

// Inverse-distance weighted mean; a member at zero distance from the region
// mean is returned as is (first in scan order).
PoolResult pool_idw(const DistanceKind& kind, const ActivationMap& map,
                    const PoolGeometry& geometry);

// Exponential maximum: per-channel softmax of the activations.
PoolResult pool_em(const ActivationMap& map, const PoolGeometry& geometry);

// Exponential DSC weighting: softmax of each member's DSC similarity to the
// region mean, shared across channels.
PoolResult pool_edscw(const ActivationMap& map, const PoolGeometry& geometry);

// beta * eDSCW + (1 - beta) * eM. Throws ShapeError if beta does not match the
// output extents.
PoolResult pool_ada(const ActivationMap& map, const PoolGeometry& geometry,
                    const BetaMap& beta);

// Dispatch on spec. ada:learned uses a trainable beta initialized to 0.5.
PoolResult pool(const OperatorSpec& spec, const ActivationMap& map,
                const PoolGeometry& geometry);

// Fused value of the two branches at one location.
inline double blend(double beta, double edsc, double em) {
  return edsc == em ? em : beta * edsc + (1.0 - beta) * em;
}

}  // namespace adapool
