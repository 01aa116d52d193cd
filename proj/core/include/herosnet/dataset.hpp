#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "herosnet/cassi.hpp"

namespace herosnet::dataset {

/// Generator parameters. Every cube is a clamped sum of
///  - a dim background with a linear spectral tilt,
///  - `blobs` spatial Gaussians (std-dev 8..25% of the side), each carrying a
///    Gaussian spectral envelope centred at a random band,
///  - `regions` axis-aligned rectangles of constant intensity whose spectra
///    ramp linearly between two random levels.
struct SyntheticSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 8;
  int blobs = 4;
  int regions = 2;
};

HyperspectralCube synthesize(const SyntheticSpec& spec, std::uint64_t seed);

/// One of the 8 rotations/reflections of the spatial grid. Bit 0 flips
/// columns, bit 1 flips rows, bit 2 transposes (square cubes only).
HyperspectralCube dihedral(const HyperspectralCube& cube, int k);

/// `count` cubes, cube i drawn from a seed derived from (seed, i).
std::vector<HyperspectralCube> synthesize_many(const SyntheticSpec& spec, std::size_t count, std::uint64_t seed);

/// Writes cube_0000.hsc, cube_0001.hsc, ... into `dir`; returns the paths.
std::vector<std::string> write_dataset(const std::string& dir, const std::vector<HyperspectralCube>& cubes);

/// Loads every *.hsc file of `dir` in lexicographic order.
std::vector<HyperspectralCube> load_dataset(const std::string& dir);

/// "32x32x8" -> {32, 32, 8}. Throws UsageError on malformed input.
SyntheticSpec parse_geometry(const std::string& text);

}  // namespace herosnet::dataset
