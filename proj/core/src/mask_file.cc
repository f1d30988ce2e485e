#include "adapool/mask_file.h"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "adapool/errors.h"

namespace adapool {

namespace {

constexpr std::uint8_t kHasEm = 1;
constexpr std::uint8_t kHasEdsc = 2;
constexpr std::uint8_t kHasBeta = 4;

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<std::uint8_t, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(v); }
  void u32(std::size_t v) {
    if (v > 0xffffffffULL) throw FormatError("extent too large for mask file");
    put(to_little(static_cast<std::uint32_t>(v)));
  }
  void u32s(const std::vector<std::size_t>& v) {
    for (auto x : v) u32(x);
  }
  void f64s(std::span<const double> v) {
    for (double x : v) put(to_little(std::bit_cast<std::uint64_t>(x)));
  }
  std::vector<std::uint8_t> finish() {
    const auto crc = crc32(0L, out_.data(), static_cast<uInt>(out_.size()));
    put(to_little(static_cast<std::uint32_t>(crc)));
    return std::move(out_);
  }
  void raw(const char* p, std::size_t n) { out_.insert(out_.end(), p, p + n); }

 private:
  template <typename T>
  void put(T v) {
    std::uint8_t b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    out_.insert(out_.end(), b, b + sizeof(T));
  }
  std::vector<std::uint8_t> out_;
};

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::size_t u32() { return to_little(take<std::uint32_t>()); }
  std::vector<std::size_t> u32s(std::size_t n) {
    std::vector<std::size_t> v(n);
    for (auto& x : v) x = u32();
    return v;
  }
  std::vector<double> f64s(std::size_t n) {
    if (n > remaining() / 8) throw FormatError("mask file payload truncated");
    std::vector<double> v(n);
    for (auto& x : v) x = std::bit_cast<double>(to_little(take<std::uint64_t>()));
    return v;
  }
  void expect(const char* p, std::size_t n) {
    if (remaining() < n || std::memcmp(in_.data() + pos_, p, n) != 0) {
      throw FormatError("not a mask file (bad magic)");
    }
    pos_ += n;
  }
  std::size_t remaining() const { return in_.size() - pos_; }

 private:
  template <typename T>
  T take() {
    if (remaining() < sizeof(T)) throw FormatError("mask file truncated");
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
};

std::size_t product(const std::vector<std::size_t>& v) {
  std::size_t p = 1;
  for (auto x : v) p *= x;
  return p;
}

}  // namespace

MaskFile mask_file_from(const PoolResult& result) {
  if (!result.masks) {
    throw MissingState("only em, edscw and ada results carry weight masks");
  }
  return MaskFile{result.output, *result.masks, result.beta};
}

std::vector<std::uint8_t> encode_mask_file(const MaskFile& file) {
  const auto& m = file.masks;
  Writer w;
  w.raw(kMaskMagic, sizeof kMaskMagic);
  w.u32(m.geometry.dims());
  w.u32(file.pooled.channels());
  w.u32s(m.geometry.kernel());
  w.u32s(m.geometry.stride());
  w.u32s(m.geometry.padding());
  w.u32s(m.input_shape.spatial);
  w.u32s(file.pooled.spatial());
  std::uint8_t flags = 0;
  if (m.has_em()) flags |= kHasEm;
  if (m.has_edsc()) flags |= kHasEdsc;
  if (file.beta) flags |= kHasBeta;
  w.u8(flags);
  w.u8(0);
  w.u8(0);
  w.u8(0);
  w.f64s(file.pooled.data());
  if (m.has_em()) w.f64s(m.em);
  if (m.has_edsc()) w.f64s(m.edsc);
  if (file.beta) w.f64s(file.beta->values());
  return w.finish();
}

MaskFile decode_mask_file(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < sizeof kMaskMagic + 4) throw FormatError("mask file truncated");
  Reader header(bytes);
  header.expect(kMaskMagic, sizeof kMaskMagic);

  const auto body = bytes.first(bytes.size() - 4);
  Reader trailer(bytes.subspan(bytes.size() - 4));
  const auto stored = static_cast<std::uint32_t>(trailer.u32());
  const auto actual = static_cast<std::uint32_t>(
      crc32(0L, body.data(), static_cast<uInt>(body.size())));
  if (stored != actual) throw FormatError("mask file checksum mismatch");

  Reader r(body);
  r.expect(kMaskMagic, sizeof kMaskMagic);
  const std::size_t dims = r.u32();
  if (dims != 2 && dims != 3) throw FormatError("mask file: bad dimensionality");
  const std::size_t channels = r.u32();
  auto kernel = r.u32s(dims);
  auto stride = r.u32s(dims);
  auto padding = r.u32s(dims);
  auto in = r.u32s(dims);
  auto out = r.u32s(dims);
  const std::uint8_t flags = r.u8();
  r.u8();
  r.u8();
  r.u8();

  try {
    PoolGeometry geometry(std::move(kernel), std::move(stride),
                          std::move(padding));
    const MapShape input_shape{channels, std::move(in)};
    validate_shape(input_shape);
    if (geometry.output_extents(input_shape.spatial) != out) {
      throw FormatError("mask file: output extents inconsistent with geometry");
    }
    const std::size_t regions = product(out);
    const std::size_t volume = geometry.kernel_volume();
    ActivationMap pooled(channels, out, r.f64s(channels * regions));
    WeightMasks masks{geometry, input_shape, regions, volume, {}, {}};
    if (flags & kHasEm) masks.em = r.f64s(channels * regions * volume);
    if (flags & kHasEdsc) masks.edsc = r.f64s(regions * volume);
    std::optional<BetaMap> beta;
    if (flags & kHasBeta) beta.emplace(out, r.f64s(regions));
    if (r.remaining() != 0) throw FormatError("mask file: trailing bytes");
    return MaskFile{std::move(pooled), std::move(masks), std::move(beta)};
  } catch (const FormatError&) {
    throw;
  } catch (const Error& e) {
    throw FormatError(std::string("mask file: ") + e.what());
  }
}

void write_mask_file(const std::filesystem::path& path, const MaskFile& file) {
  const auto bytes = encode_mask_file(file);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

MaskFile read_mask_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_mask_file(bytes);
}

}  // namespace adapool
