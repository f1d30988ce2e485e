#include "adapool/activation_map.h"

#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

#include "adapool/errors.h"

namespace adapool {

std::size_t MapShape::spatial_size() const {
  return std::accumulate(spatial.begin(), spatial.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string MapShape::to_string() const {
  std::ostringstream os;
  os << channels;
  for (auto e : spatial) os << 'x' << e;
  return os.str();
}

void validate_shape(const MapShape& shape) {
  if (shape.channels == 0) throw ShapeError("activation map needs >= 1 channel");
  if (shape.spatial.size() != 2 && shape.spatial.size() != 3) {
    throw ShapeError("activation map must have 2 or 3 spatial dims, got " +
                     std::to_string(shape.spatial.size()));
  }
  for (auto e : shape.spatial) {
    if (e == 0) throw ShapeError("zero spatial extent in " + shape.to_string());
  }
}

ActivationMap::ActivationMap(MapShape shape)
    : shape_(std::move(shape)),
      spatial_size_(shape_.spatial_size()),
      data_(shape_.size(), 0.0) {
  validate_shape(shape_);
}

ActivationMap::ActivationMap(std::size_t channels,
                             std::vector<std::size_t> spatial)
    : ActivationMap(MapShape{channels, std::move(spatial)}) {}

ActivationMap::ActivationMap(MapShape shape, std::vector<double> data)
    : shape_(std::move(shape)),
      spatial_size_(shape_.spatial_size()),
      data_(std::move(data)) {
  validate_shape(shape_);
  if (data_.size() != shape_.size()) {
    throw ShapeError("data length " + std::to_string(data_.size()) +
                     " does not match shape " + shape_.to_string());
  }
  for (double v : data_) {
    if (!std::isfinite(v)) throw InvalidArgument("non-finite activation");
  }
}

ActivationMap::ActivationMap(std::size_t channels,
                             std::vector<std::size_t> spatial,
                             std::vector<double> data)
    : ActivationMap(MapShape{channels, std::move(spatial)}, std::move(data)) {}

std::span<const double> ActivationMap::channel(std::size_t c) const {
  return std::span<const double>(data_).subspan(c * spatial_size_,
                                                spatial_size_);
}

std::span<double> ActivationMap::mutable_channel(std::size_t c) {
  return std::span<double>(data_).subspan(c * spatial_size_, spatial_size_);
}

}  // namespace adapool
