#include "adapool/image_io.h"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "adapool/errors.h"

namespace adapool {

namespace fs = std::filesystem;

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

std::string lower_extension(const fs::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return std::tolower(ch); });
  return ext;
}

ActivationMap from_interleaved(const std::vector<unsigned char>& pixels,
                               std::size_t channels, std::size_t height,
                               std::size_t width) {
  std::vector<double> data(channels * height * width);
  const std::size_t plane = height * width;
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      data[c * plane + i] = pixels[i * channels + c];
    }
  }
  return ActivationMap(channels, {height, width}, std::move(data));
}

std::vector<unsigned char> to_interleaved(const ActivationMap& map) {
  const std::size_t channels = map.channels();
  const std::size_t plane = map.spatial_size();
  std::vector<unsigned char> pixels(channels * plane);
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::size_t c = 0; c < channels; ++c) {
      const double v = std::clamp(std::round(map.at(c, i)), 0.0, 255.0);
      pixels[i * channels + c] = static_cast<unsigned char>(v);
    }
  }
  return pixels;
}

ActivationMap read_png(const fs::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw FormatError("cannot open " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw FormatError("libpng initialisation failed");
  }
  std::vector<unsigned char> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int channels = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG " + path.string());
  }
  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);
  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  channels = png_get_channels(png, info);
  pixels.resize(static_cast<std::size_t>(width) * height * channels);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) {
    rows[y] = pixels.data() + static_cast<std::size_t>(y) * width * channels;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_interleaved(pixels, static_cast<std::size_t>(channels), height,
                          width);
}

void write_png(const fs::path& path, const ActivationMap& map) {
  const auto pixels = to_interleaved(map);
  const auto height = static_cast<png_uint_32>(map.spatial()[0]);
  const auto width = static_cast<png_uint_32>(map.spatial()[1]);
  const std::size_t channels = map.channels();
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw FormatError("cannot write " + path.string());
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw FormatError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw FormatError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, width, height, 8,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (png_uint_32 y = 0; y < height; ++y) {
    png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * width *
                                           channels);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// Next whitespace-delimited header token, skipping '#' comments.
std::string pnm_token(std::istream& in) {
  std::string token;
  char ch = 0;
  while (in.get(ch)) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else if (std::isspace(static_cast<unsigned char>(ch))) {
      if (!token.empty()) break;
    } else {
      token.push_back(ch);
    }
  }
  return token;
}

ActivationMap read_pnm(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  const std::string magic = pnm_token(in);
  if (magic != "P6" && magic != "P5") {
    throw FormatError(path.string() + " is not a binary PPM/PGM file");
  }
  std::size_t width = 0, height = 0, maxval = 0;
  try {
    width = std::stoul(pnm_token(in));
    height = std::stoul(pnm_token(in));
    maxval = std::stoul(pnm_token(in));
  } catch (const std::exception&) {
    throw FormatError("malformed PNM header in " + path.string());
  }
  if (width == 0 || height == 0 || maxval == 0 || maxval > 255) {
    throw FormatError("unsupported PNM header in " + path.string());
  }
  const std::size_t channels = magic == "P6" ? 3 : 1;
  std::vector<unsigned char> pixels(width * height * channels);
  in.read(reinterpret_cast<char*>(pixels.data()),
          static_cast<std::streamsize>(pixels.size()));
  if (in.gcount() != static_cast<std::streamsize>(pixels.size())) {
    throw FormatError("truncated PNM data in " + path.string());
  }
  if (maxval != 255) {
    for (auto& p : pixels) {
      p = static_cast<unsigned char>(std::lround(p * 255.0 / maxval));
    }
  }
  return from_interleaved(pixels, channels, height, width);
}

void write_pnm(const fs::path& path, const ActivationMap& map) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << (map.channels() == 1 ? "P5" : "P6") << '\n'
      << map.spatial()[1] << ' ' << map.spatial()[0] << "\n255\n";
  const auto pixels = to_interleaved(map);
  out.write(reinterpret_cast<const char*>(pixels.data()),
            static_cast<std::streamsize>(pixels.size()));
  if (!out) throw FormatError("failed writing " + path.string());
}

}  // namespace

bool is_image_file(const fs::path& path) {
  const auto ext = lower_extension(path);
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

ActivationMap read_image(const fs::path& path) {
  const auto ext = lower_extension(path);
  if (ext == ".ppm" || ext == ".pgm") return read_pnm(path);
  return read_png(path);
}

void write_image(const fs::path& path, const ActivationMap& map) {
  if (map.spatial().size() != 2 ||
      (map.channels() != 1 && map.channels() != 3)) {
    throw ShapeError("only 2D maps with 1 or 3 channels can be saved, got " +
                     map.shape().to_string());
  }
  const auto ext = lower_extension(path);
  if (ext == ".ppm" || ext == ".pgm") {
    write_pnm(path, map);
  } else {
    write_png(path, map);
  }
}

ActivationMap crop_to_multiple(const ActivationMap& map, std::size_t k) {
  if (k == 0) throw InvalidArgument("kernel size must be >= 1");
  std::vector<std::size_t> ext = map.spatial();
  for (auto& e : ext) {
    e -= e % k;
    if (e == 0) throw ShapeError("map smaller than the kernel");
  }
  if (ext == map.spatial()) return map;
  ActivationMap out(map.channels(), ext);
  const auto& in = map.spatial();
  const std::size_t dims = ext.size();
  for (std::size_t s = 0; s < out.spatial_size(); ++s) {
    std::size_t rest = s, src = 0, stride = 1;
    std::vector<std::size_t> coord(dims);
    for (std::size_t d = dims; d-- > 0;) {
      coord[d] = rest % ext[d];
      rest /= ext[d];
    }
    for (std::size_t d = dims; d-- > 0;) {
      src += coord[d] * stride;
      stride *= in[d];
    }
    for (std::size_t c = 0; c < map.channels(); ++c) out.at(c, s) = map.at(c, src);
  }
  return out;
}

}  // namespace adapool
