#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace adapool {

// Channel count plus spatial extents (H, W) or (T, H, W).
struct MapShape {
  std::size_t channels = 0;
  std::vector<std::size_t> spatial;

  std::size_t spatial_size() const;
  std::size_t size() const { return channels * spatial_size(); }
  std::size_t dims() const { return spatial.size(); }

  std::string to_string() const;

  friend bool operator==(const MapShape&, const MapShape&) = default;
};

// Dense C x H x W (or C x T x H x W) array of doubles in channel-major,
// row-major order. Values are finite on construction.
class ActivationMap {
 public:
  ActivationMap() = default;

  // Zero-filled map.
  explicit ActivationMap(MapShape shape);
  ActivationMap(std::size_t channels, std::vector<std::size_t> spatial);

  // Throws ShapeError on a length mismatch and InvalidArgument on NaN/Inf.
  ActivationMap(MapShape shape, std::vector<double> data);
  ActivationMap(std::size_t channels, std::vector<std::size_t> spatial,
                std::vector<double> data);

  const MapShape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  const std::vector<std::size_t>& spatial() const { return shape_.spatial; }
  std::size_t spatial_size() const { return spatial_size_; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  std::span<double> mutable_data() { return data_; }

  // One channel plane.
  std::span<const double> channel(std::size_t c) const;
  std::span<double> mutable_channel(std::size_t c);

  // Element at channel c and flat spatial index s.
  double at(std::size_t c, std::size_t s) const {
    return data_[c * spatial_size_ + s];
  }
  double& at(std::size_t c, std::size_t s) {
    return data_[c * spatial_size_ + s];
  }

  std::vector<double> release() && { return std::move(data_); }

  friend bool operator==(const ActivationMap& a, const ActivationMap& b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  MapShape shape_;
  std::size_t spatial_size_ = 0;
  std::vector<double> data_;
};

void validate_shape(const MapShape& shape);

}  // namespace adapool
