#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "adapool/activation_map.h"

namespace adapool {

// Kernel, stride and padding per spatial dimension. Spatial dimensionality is
// 2 (H, W) or 3 (T, H, W).
class PoolGeometry {
 public:
  PoolGeometry(std::vector<std::size_t> kernel, std::vector<std::size_t> stride,
               std::vector<std::size_t> padding);

  // k x k (or k x k x k) regions with stride k and no padding.
  static PoolGeometry square(std::size_t k, std::size_t dims = 2);

  std::size_t dims() const { return kernel_.size(); }
  const std::vector<std::size_t>& kernel() const { return kernel_; }
  const std::vector<std::size_t>& stride() const { return stride_; }
  const std::vector<std::size_t>& padding() const { return padding_; }

  // |R|, the number of kernel positions including padded ones.
  std::size_t kernel_volume() const;

  bool non_overlapping() const { return stride_ == kernel_; }
  bool unpadded() const;

  // floor((in + 2 pad - kernel) / stride) + 1 per dimension. Throws
  // ShapeError when the dimensionality differs or the kernel exceeds the
  // padded extent.
  std::vector<std::size_t> output_extents(
      std::span<const std::size_t> spatial) const;
  MapShape output_shape(const MapShape& input) const;

  std::string to_string() const;

  friend bool operator==(const PoolGeometry&, const PoolGeometry&) = default;

 private:
  std::vector<std::size_t> kernel_;
  std::vector<std::size_t> stride_;
  std::vector<std::size_t> padding_;
};

// One kernel region. `members` holds the in-bounds flat spatial indices in
// increasing order; positions that fall into the padding are only counted.
struct RegionView {
  std::vector<std::size_t> output_index;
  std::vector<std::size_t> members;
  // For each member, its slot in the full kernel (0 .. kernel_volume-1).
  std::vector<std::size_t> slots;
  std::size_t padded_count = 0;

  std::size_t valid_count() const { return members.size(); }
};

// All regions in output row-major order.
std::vector<RegionView> enumerate_regions(const MapShape& shape,
                                          const PoolGeometry& geometry);

// Per-channel mean over the valid members of `region`.
std::vector<double> region_mean(const ActivationMap& map,
                                const RegionView& region);

// Allocation-free region walk used by the operator kernels. Visits regions in
// the same order as enumerate_regions and reuses one member buffer.
class RegionWalker {
 public:
  RegionWalker(const MapShape& shape, const PoolGeometry& geometry);

  std::size_t region_count() const { return region_count_; }
  const std::vector<std::size_t>& output_extents() const { return out_; }
  std::size_t kernel_volume() const { return kernel_volume_; }

  // Fills the member/slot buffers for region `r` (flat output index).
  void load(std::size_t r);

  std::span<const std::size_t> members() const { return members_; }
  std::span<const std::size_t> slots() const { return slots_; }

 private:
  std::vector<std::size_t> in_;
  std::vector<std::size_t> out_;
  std::vector<std::size_t> kernel_;
  std::vector<std::size_t> stride_;
  std::vector<std::size_t> padding_;
  std::vector<std::size_t> in_strides_;
  std::size_t region_count_ = 0;
  std::size_t kernel_volume_ = 0;
  std::vector<std::size_t> members_;
  std::vector<std::size_t> slots_;
  std::vector<std::size_t> coord_;
};

}  // namespace adapool
