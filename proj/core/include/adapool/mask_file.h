#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "adapool/activation_map.h"
#include "adapool/pool.h"

namespace adapool {

// Everything adaUnPool needs to inflate a pooled map.
//
// Binary layout, all integers and floats little-endian:
//
//   char[12]  "ADAPOOLMASK1"
//   u32       dims (2 or 3)
//   u32       channels
//   u32[dims] kernel, then stride, then padding
//   u32[dims] input spatial extents, then output spatial extents
//   u8        flags: bit 0 eM weights, bit 1 eDSC weights, bit 2 beta
//   u8[3]     zero
//   f64[C * prod(out)]            pooled map
//   f64[C * regions * |R|]        eM weights      (if bit 0)
//   f64[regions * |R|]            eDSC weights    (if bit 1)
//   f64[regions]                  beta            (if bit 2)
//   u32       CRC-32 of every preceding byte
struct MaskFile {
  ActivationMap pooled;
  WeightMasks masks;
  std::optional<BetaMap> beta;
};

inline constexpr char kMaskMagic[12] = {'A', 'D', 'A', 'P', 'O', 'O',
                                        'L', 'M', 'A', 'S', 'K', '1'};

// Throws MissingState if the result has no weight masks.
MaskFile mask_file_from(const PoolResult& result);

std::vector<std::uint8_t> encode_mask_file(const MaskFile& file);
// Throws FormatError on a bad magic, inconsistent header, truncated payload
// or checksum mismatch.
MaskFile decode_mask_file(std::span<const std::uint8_t> bytes);

void write_mask_file(const std::filesystem::path& path, const MaskFile& file);
MaskFile read_mask_file(const std::filesystem::path& path);

}  // namespace adapool
