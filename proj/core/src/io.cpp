#include "herosnet/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <memory>

#include "binary_io.hpp"

namespace herosnet::io {

namespace {

constexpr char kCubeMagic[5] = "HSC1";
constexpr char kMeasMagic[5] = "MSR1";
// Refuse headers that would need more than 2^31 values; they are corrupt in practice.
constexpr std::uint64_t kMaxValues = std::uint64_t{1} << 31;

void put_payload(std::ostream& os, const std::vector<double>& values) {
  for (double v : values) detail::put_f32(os, static_cast<float>(v));
}

std::vector<double> get_payload(std::istream& is, std::uint64_t count, const char* format) {
  std::vector<double> values(count);
  for (auto& v : values) {
    const float f = detail::get_f32(is, "payload");
    if (!std::isfinite(f)) throw FormatError(std::string(format) + ": non-finite value in payload");
    v = f;
  }
  return values;
}

std::uint32_t get_extent(std::istream& is, const char* field, const char* format) {
  const auto v = detail::get_u32(is, field);
  if (v == 0) throw FormatError(std::string(format) + ": field " + field + " is zero");
  return v;
}

}  // namespace

void write_cube(std::ostream& os, const HyperspectralCube& cube) {
  os.write(kCubeMagic, 4);
  detail::put_u32(os, static_cast<std::uint32_t>(cube.height));
  detail::put_u32(os, static_cast<std::uint32_t>(cube.width));
  detail::put_u32(os, static_cast<std::uint32_t>(cube.channels));
  put_payload(os, cube.values);
}

HyperspectralCube read_cube(std::istream& is) {
  detail::expect_magic(is, kCubeMagic, "cube file");
  const auto h = get_extent(is, "H", "cube file");
  const auto w = get_extent(is, "W", "cube file");
  const auto c = get_extent(is, "C", "cube file");
  const std::uint64_t n = std::uint64_t{h} * w * c;
  if (n > kMaxValues) throw FormatError("cube file: geometry too large");
  auto values = get_payload(is, n, "cube file");
  detail::expect_eof(is, "cube file");
  return HyperspectralCube(h, w, c, std::move(values));
}

void save_cube(const std::string& path, const HyperspectralCube& cube) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_cube(os, cube);
}

HyperspectralCube load_cube(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open cube file " + path);
  return read_cube(is);
}

void write_measurement(std::ostream& os, const Measurement& meas) {
  os.write(kMeasMagic, 4);
  detail::put_u32(os, static_cast<std::uint32_t>(meas.height));
  detail::put_u32(os, static_cast<std::uint32_t>(meas.width));
  put_payload(os, meas.values);
}

Measurement read_measurement(std::istream& is) {
  detail::expect_magic(is, kMeasMagic, "measurement file");
  const auto h = get_extent(is, "H", "measurement file");
  const auto w = get_extent(is, "width", "measurement file");
  const std::uint64_t n = std::uint64_t{h} * w;
  if (n > kMaxValues) throw FormatError("measurement file: geometry too large");
  auto values = get_payload(is, n, "measurement file");
  detail::expect_eof(is, "measurement file");
  return Measurement(h, w, std::move(values));
}

void save_measurement(const std::string& path, const Measurement& meas) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_measurement(os, meas);
}

Measurement load_measurement(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open measurement file " + path);
  return read_measurement(is);
}

unsigned char quantize_8bit(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  return static_cast<unsigned char>(std::floor(clamped * 255.0 + 0.5));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

void write_gray_png(const std::string& path, const std::vector<unsigned char>& pixels, std::size_t h, std::size_t w) {
  FilePtr fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error("cannot open " + path + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error("libpng failed writing " + path);
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t m = 0; m < h; ++m) png_write_row(png, pixels.data() + m * w);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void export_band_pngs(const std::string& dir, const HyperspectralCube& cube) {
  std::filesystem::create_directories(dir);
  const std::size_t plane = cube.height * cube.width;
  for (std::size_t c = 0; c < cube.channels; ++c) {
    std::vector<unsigned char> pixels(plane);
    for (std::size_t i = 0; i < plane; ++i) pixels[i] = quantize_8bit(cube.values[c * plane + i]);
    char name[32];
    std::snprintf(name, sizeof name, "band_%02zu.png", c);
    write_gray_png((std::filesystem::path(dir) / name).string(), pixels, cube.height, cube.width);
  }
}

std::vector<unsigned char> read_gray_png(const std::string& path, std::size_t& height, std::size_t& width) {
  FilePtr fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw FormatError("cannot open " + path);
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  std::vector<unsigned char> pixels;  // declared before setjmp so a longjmp never skips its destructor
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("libpng failed reading " + path);
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY || png_get_bit_depth(png, info) != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path + ": not an 8-bit grayscale PNG");
  }
  height = png_get_image_height(png, info);
  width = png_get_image_width(png, info);
  pixels.resize(height * width);
  for (std::size_t m = 0; m < height; ++m) png_read_row(png, pixels.data() + m * width, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return pixels;
}

}  // namespace herosnet::io
