#include "adapool/geometry.h"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

#include "adapool/errors.h"

namespace adapool {

namespace {

std::string join(const std::vector<std::size_t>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) os << (i ? "x" : "") << v[i];
  return os.str();
}

}  // namespace

PoolGeometry::PoolGeometry(std::vector<std::size_t> kernel,
                           std::vector<std::size_t> stride,
                           std::vector<std::size_t> padding)
    : kernel_(std::move(kernel)),
      stride_(std::move(stride)),
      padding_(std::move(padding)) {
  if (kernel_.size() != 2 && kernel_.size() != 3) {
    throw ShapeError("pool geometry must be 2D or 3D");
  }
  if (stride_.size() != kernel_.size() || padding_.size() != kernel_.size()) {
    throw ShapeError("kernel, stride and padding must have equal rank");
  }
  for (std::size_t d = 0; d < kernel_.size(); ++d) {
    if (kernel_[d] == 0 || stride_[d] == 0) {
      throw ShapeError("kernel and stride extents must be positive");
    }
    if (padding_[d] >= kernel_[d]) {
      // A region made only of padding has no members to aggregate.
      throw ShapeError("padding must be smaller than the kernel");
    }
  }
}

PoolGeometry PoolGeometry::square(std::size_t k, std::size_t dims) {
  return PoolGeometry(std::vector<std::size_t>(dims, k),
                      std::vector<std::size_t>(dims, k),
                      std::vector<std::size_t>(dims, 0));
}

std::size_t PoolGeometry::kernel_volume() const {
  return std::accumulate(kernel_.begin(), kernel_.end(), std::size_t{1},
                         std::multiplies<>());
}

bool PoolGeometry::unpadded() const {
  for (auto p : padding_) {
    if (p != 0) return false;
  }
  return true;
}

std::vector<std::size_t> PoolGeometry::output_extents(
    std::span<const std::size_t> spatial) const {
  if (spatial.size() != dims()) {
    throw ShapeError("geometry is " + std::to_string(dims()) +
                     "D but the map has " + std::to_string(spatial.size()) +
                     " spatial dims");
  }
  std::vector<std::size_t> out(dims());
  for (std::size_t d = 0; d < dims(); ++d) {
    const std::size_t padded = spatial[d] + 2 * padding_[d];
    if (kernel_[d] > padded) {
      throw ShapeError("kernel " + std::to_string(kernel_[d]) +
                       " exceeds padded extent " + std::to_string(padded));
    }
    out[d] = (padded - kernel_[d]) / stride_[d] + 1;
  }
  return out;
}

MapShape PoolGeometry::output_shape(const MapShape& input) const {
  return MapShape{input.channels, output_extents(input.spatial)};
}

std::string PoolGeometry::to_string() const {
  return "k=" + join(kernel_) + " s=" + join(stride_) + " p=" + join(padding_);
}

RegionWalker::RegionWalker(const MapShape& shape, const PoolGeometry& geometry)
    : in_(shape.spatial),
      out_(geometry.output_extents(shape.spatial)),
      kernel_(geometry.kernel()),
      stride_(geometry.stride()),
      padding_(geometry.padding()),
      in_strides_(in_.size(), 1),
      region_count_(std::accumulate(out_.begin(), out_.end(), std::size_t{1},
                                    std::multiplies<>())),
      kernel_volume_(geometry.kernel_volume()),
      coord_(in_.size()) {
  for (std::size_t d = in_.size() - 1; d-- > 0;) {
    in_strides_[d] = in_strides_[d + 1] * in_[d + 1];
  }
  members_.reserve(kernel_volume_);
  slots_.reserve(kernel_volume_);
}

void RegionWalker::load(std::size_t r) {
  members_.clear();
  slots_.clear();
  const std::size_t dims = in_.size();
  // Region origin in (unpadded) input coordinates, possibly negative.
  std::ptrdiff_t origin[3];
  for (std::size_t d = dims; d-- > 0;) {
    const std::size_t o = r % out_[d];
    r /= out_[d];
    origin[d] = static_cast<std::ptrdiff_t>(o * stride_[d]) -
                static_cast<std::ptrdiff_t>(padding_[d]);
  }
  std::fill(coord_.begin(), coord_.end(), 0);
  for (std::size_t slot = 0; slot < kernel_volume_; ++slot) {
    bool inside = true;
    std::size_t flat = 0;
    for (std::size_t d = 0; d < dims; ++d) {
      const std::ptrdiff_t x = origin[d] + static_cast<std::ptrdiff_t>(coord_[d]);
      if (x < 0 || x >= static_cast<std::ptrdiff_t>(in_[d])) {
        inside = false;
        break;
      }
      flat += static_cast<std::size_t>(x) * in_strides_[d];
    }
    if (inside) {
      members_.push_back(flat);
      slots_.push_back(slot);
    }
    for (std::size_t d = dims; d-- > 0;) {
      if (++coord_[d] < kernel_[d]) break;
      coord_[d] = 0;
    }
  }
}

std::vector<RegionView> enumerate_regions(const MapShape& shape,
                                          const PoolGeometry& geometry) {
  RegionWalker walker(shape, geometry);
  const auto& out = walker.output_extents();
  std::vector<RegionView> regions;
  regions.reserve(walker.region_count());
  for (std::size_t r = 0; r < walker.region_count(); ++r) {
    walker.load(r);
    RegionView view;
    view.output_index.resize(out.size());
    std::size_t rest = r;
    for (std::size_t d = out.size(); d-- > 0;) {
      view.output_index[d] = rest % out[d];
      rest /= out[d];
    }
    view.members.assign(walker.members().begin(), walker.members().end());
    view.slots.assign(walker.slots().begin(), walker.slots().end());
    view.padded_count = walker.kernel_volume() - view.members.size();
    regions.push_back(std::move(view));
  }
  return regions;
}

std::vector<double> region_mean(const ActivationMap& map,
                                const RegionView& region) {
  std::vector<double> mean(map.channels(), 0.0);
  const double n = static_cast<double>(region.valid_count());
  for (std::size_t c = 0; c < map.channels(); ++c) {
    double sum = 0.0;
    for (auto s : region.members) sum += map.at(c, s);
    mean[c] = sum / n;
  }
  return mean;
}

}  // namespace adapool
