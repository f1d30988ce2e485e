#include "adapool/unpool.h"

#include <algorithm>
#include <cmath>

#include "adapool/errors.h"

namespace adapool {

namespace {

void check_tiling(const ActivationMap& pooled, const PoolGeometry& geometry,
                  const std::vector<std::size_t>& target) {
  if (!geometry.non_overlapping() || !geometry.unpadded()) {
    throw ShapeError("inflation requires stride == kernel and no padding");
  }
  if (geometry.output_extents(target) != pooled.spatial()) {
    throw ShapeError("target extents are inconsistent with the pooled map");
  }
}

std::vector<std::size_t> strides_of(const std::vector<std::size_t>& ext) {
  std::vector<std::size_t> s(ext.size(), 1);
  for (std::size_t d = ext.size() - 1; d-- > 0;) s[d] = s[d + 1] * ext[d + 1];
  return s;
}

// Maps an input-resolution flat index to the flat index of the nearest
// position covered by a region, and that position's region.
class TileMap {
 public:
  TileMap(const PoolGeometry& geometry, const std::vector<std::size_t>& in,
          const std::vector<std::size_t>& out)
      : kernel_(geometry.kernel()),
        in_(in),
        out_(out),
        in_strides_(strides_of(in)),
        out_strides_(strides_of(out)) {}

  void locate(std::size_t flat, std::size_t& covered, std::size_t& region) const {
    covered = 0;
    region = 0;
    for (std::size_t d = 0; d < in_.size(); ++d) {
      std::size_t x = (flat / in_strides_[d]) % in_[d];
      x = std::min(x, out_[d] * kernel_[d] - 1);
      covered += x * in_strides_[d];
      region += (x / kernel_[d]) * out_strides_[d];
    }
  }

 private:
  std::vector<std::size_t> kernel_, in_, out_, in_strides_, out_strides_;
};

}  // namespace

ActivationMap nearest_inflate(const ActivationMap& pooled,
                              const PoolGeometry& geometry,
                              const std::vector<std::size_t>& target_spatial) {
  check_tiling(pooled, geometry, target_spatial);
  ActivationMap out(pooled.channels(), target_spatial);
  const TileMap tiles(geometry, target_spatial, pooled.spatial());
  std::size_t covered = 0, region = 0;
  for (std::size_t s = 0; s < out.spatial_size(); ++s) {
    tiles.locate(s, covered, region);
    for (std::size_t c = 0; c < out.channels(); ++c) {
      out.at(c, s) = pooled.at(c, region);
    }
  }
  return out;
}

ActivationMap bilinear_inflate(const ActivationMap& pooled,
                               const PoolGeometry& geometry,
                               const std::vector<std::size_t>& target_spatial) {
  check_tiling(pooled, geometry, target_spatial);
  const std::size_t dims = target_spatial.size();
  const auto& out_ext = pooled.spatial();
  const auto out_strides = strides_of(out_ext);
  const auto in_strides = strides_of(target_spatial);
  ActivationMap out(pooled.channels(), target_spatial);

  std::vector<std::size_t> lo(dims), hi(dims);
  std::vector<double> frac(dims);
  for (std::size_t s = 0; s < out.spatial_size(); ++s) {
    for (std::size_t d = 0; d < dims; ++d) {
      const std::size_t x = (s / in_strides[d]) % target_spatial[d];
      const double k = static_cast<double>(geometry.kernel()[d]);
      // Region o is centred at (o + 0.5) k - 0.5.
      double pos = (static_cast<double>(x) + 0.5) / k - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(out_ext[d] - 1));
      lo[d] = static_cast<std::size_t>(std::floor(pos));
      hi[d] = std::min(lo[d] + 1, out_ext[d] - 1);
      frac[d] = pos - static_cast<double>(lo[d]);
    }
    for (std::size_t c = 0; c < out.channels(); ++c) {
      double acc = 0.0;
      for (std::size_t corner = 0; corner < (std::size_t{1} << dims); ++corner) {
        double w = 1.0;
        std::size_t idx = 0;
        for (std::size_t d = 0; d < dims; ++d) {
          const bool upper = (corner >> d) & 1U;
          w *= upper ? frac[d] : 1.0 - frac[d];
          idx += (upper ? hi[d] : lo[d]) * out_strides[d];
        }
        if (w != 0.0) acc += w * pooled.at(c, idx);
      }
      out.at(c, s) = acc;
    }
  }
  return out;
}

ActivationMap ada_unpool(const UnpoolInput& input,
                         const UnpoolOptions& options) {
  const auto& masks = input.masks;
  const auto& pooled = input.pooled;
  if (!masks.has_em() && !masks.has_edsc()) {
    throw MissingState("unpooling needs eM and/or eDSC weights");
  }
  check_tiling(pooled, masks.geometry, input.target_spatial);
  if (pooled.channels() != masks.input_shape.channels ||
      masks.input_shape.spatial != input.target_spatial ||
      masks.region_count != pooled.spatial_size()) {
    throw ShapeError("weight masks do not match the pooled map");
  }
  if (masks.has_em() && masks.has_edsc() && !input.beta) {
    throw MissingState("eM + eDSC masks need a beta map");
  }
  if (input.beta && input.beta->extents() != pooled.spatial()) {
    throw ShapeError("beta map extents do not match the pooled map");
  }

  const std::size_t regions = masks.region_count;
  const std::size_t volume = masks.kernel_volume;
  auto beta_at = [&](std::size_t r) {
    if (!masks.has_edsc()) return 0.0;
    if (!masks.has_em()) return 1.0;
    return (*input.beta)[r];
  };

  std::vector<double> dsc(volume);
  ActivationMap out(pooled.channels(), input.target_spatial);
  RegionWalker walker(masks.input_shape, masks.geometry);
  for (std::size_t r = 0; r < regions; ++r) {
    walker.load(r);
    const auto members = walker.members();
    const auto slots = walker.slots();
    const double b = beta_at(r);
    if (masks.has_edsc()) {
      const auto stored = masks.edsc_region(r);
      if (options.double_softmax) {
        double total = 0.0;
        for (auto slot : slots) total += std::exp(stored[slot]);
        for (auto slot : slots) dsc[slot] = std::exp(stored[slot]) / total;
      } else {
        std::copy(stored.begin(), stored.end(), dsc.begin());
      }
    }
    for (std::size_t c = 0; c < pooled.channels(); ++c) {
      const double value = pooled.at(c, r);
      for (std::size_t i = 0; i < members.size(); ++i) {
        const std::size_t slot = slots[i];
        double w = 0.0;
        if (!masks.has_em()) {
          w = dsc[slot];
        } else if (!masks.has_edsc()) {
          w = masks.em_region(c, r)[slot];
        } else {
          w = b * dsc[slot] + (1.0 - b) * masks.em_region(c, r)[slot];
        }
        out.at(c, members[i]) = w * value;
      }
    }
  }

  // Remainder positions copy their nearest covered neighbour.
  const TileMap tiles(masks.geometry, input.target_spatial, pooled.spatial());
  std::size_t covered = 0, region = 0;
  for (std::size_t s = 0; s < out.spatial_size(); ++s) {
    tiles.locate(s, covered, region);
    if (covered == s) continue;
    for (std::size_t c = 0; c < out.channels(); ++c) {
      out.at(c, s) = out.at(c, covered);
    }
  }
  return out;
}

ActivationMap ada_unpool(const PoolResult& pooled,
                         const UnpoolOptions& options) {
  if (!pooled.masks) throw MissingState("pool result carries no weight masks");
  UnpoolInput input{pooled.output, *pooled.masks, pooled.beta,
                    pooled.input_shape.spatial};
  return ada_unpool(input, options);
}

}  // namespace adapool
