#pragma once

#include <filesystem>

#include "adapool/activation_map.h"

namespace adapool {

// Reads an 8-bit (or 16-bit, reduced to 8) PNG or a binary PPM/PGM into a
// C x H x W map with values in [0, 255]. Gray images give one channel, colour
// images three; alpha is dropped. Throws FormatError.
ActivationMap read_image(const std::filesystem::path& path);

// Writes a 1- or 3-channel 2D map as PNG, or as PPM/PGM when the extension is
// .ppm/.pgm. Values are rounded and clamped to [0, 255].
void write_image(const std::filesystem::path& path, const ActivationMap& map);

// Top-left crop to extents divisible by k.
ActivationMap crop_to_multiple(const ActivationMap& map, std::size_t k);

bool is_image_file(const std::filesystem::path& path);

}  // namespace adapool
