#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "herosnet/cassi.hpp"

namespace herosnet::io {

// Cube file ("HSC1"): u32 H, W, C, then H*W*C f32 values, band-major then
// row-major. Measurement file ("MSR1"): u32 H, width, then f32 row-major.
// Everything little-endian.

void write_cube(std::ostream& os, const HyperspectralCube& cube);
HyperspectralCube read_cube(std::istream& is);
void save_cube(const std::string& path, const HyperspectralCube& cube);
HyperspectralCube load_cube(const std::string& path);

void write_measurement(std::ostream& os, const Measurement& meas);
Measurement read_measurement(std::istream& is);
void save_measurement(const std::string& path, const Measurement& meas);
Measurement load_measurement(const std::string& path);

/// Value in [0,1] to an 8-bit level: clamp, scale by 255, round half up.
unsigned char quantize_8bit(double v);

/// Writes one grayscale PNG per band, named band_00.png, band_01.png, ...
void export_band_pngs(const std::string& dir, const HyperspectralCube& cube);

/// Decodes an 8-bit grayscale PNG (used to check the exporter).
std::vector<unsigned char> read_gray_png(const std::string& path, std::size_t& height, std::size_t& width);

}  // namespace herosnet::io
