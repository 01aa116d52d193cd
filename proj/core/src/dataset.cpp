#include "herosnet/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <regex>

#include "herosnet/error.hpp"
#include "herosnet/io.hpp"

namespace herosnet::dataset {

namespace fs = std::filesystem;

HyperspectralCube synthesize(const SyntheticSpec& spec, std::uint64_t seed) {
  if (spec.height == 0 || spec.width == 0 || spec.channels == 0) throw UsageError("synthesize: zero extent");
  const auto H = spec.height, W = spec.width, C = spec.channels;
  std::mt19937_64 rng(seed);
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };

  HyperspectralCube cube(H, W, C);
  const double span = C > 1 ? static_cast<double>(C - 1) : 1.0;

  const double bg = uniform(0.0, 0.1);
  const double tilt = uniform(-0.05, 0.05);
  for (std::size_t c = 0; c < C; ++c) {
    const double v = bg + tilt * static_cast<double>(c) / span;
    for (std::size_t i = 0; i < H * W; ++i) cube.values[c * H * W + i] = v;
  }

  const double side = static_cast<double>(std::min(H, W));
  for (int b = 0; b < spec.blobs; ++b) {
    const double cy = uniform(0.0, static_cast<double>(H));
    const double cx = uniform(0.0, static_cast<double>(W));
    const double sigma = uniform(0.08, 0.25) * side;
    const double amp = uniform(0.4, 1.0);
    const double mu = uniform(0.0, 1.0);
    const double width = uniform(0.15, 0.6);
    for (std::size_t c = 0; c < C; ++c) {
      const double t = (static_cast<double>(c) / span - mu) / width;
      const double envelope = amp * std::exp(-0.5 * t * t);
      for (std::size_t m = 0; m < H; ++m) {
        for (std::size_t n = 0; n < W; ++n) {
          const double dy = (static_cast<double>(m) + 0.5 - cy) / sigma;
          const double dx = (static_cast<double>(n) + 0.5 - cx) / sigma;
          cube.at(c, m, n) += envelope * std::exp(-0.5 * (dx * dx + dy * dy));
        }
      }
    }
  }

  for (int r = 0; r < spec.regions; ++r) {
    const auto h = std::max<std::size_t>(1, static_cast<std::size_t>(uniform(0.15, 0.45) * static_cast<double>(H)));
    const auto w = std::max<std::size_t>(1, static_cast<std::size_t>(uniform(0.15, 0.45) * static_cast<double>(W)));
    const auto top = static_cast<std::size_t>(uniform(0.0, static_cast<double>(H - h + 1)));
    const auto left = static_cast<std::size_t>(uniform(0.0, static_cast<double>(W - w + 1)));
    const double lo = uniform(0.0, 0.8);
    const double hi = uniform(0.0, 0.8);
    for (std::size_t c = 0; c < C; ++c) {
      const double level = lo + (hi - lo) * static_cast<double>(c) / span;
      for (std::size_t m = top; m < std::min(H, top + h); ++m) {
        for (std::size_t n = left; n < std::min(W, left + w); ++n) cube.at(c, m, n) = level;
      }
    }
  }

  for (auto& v : cube.values) v = std::clamp(v, 0.0, 1.0);
  return cube;
}

HyperspectralCube dihedral(const HyperspectralCube& cube, int k) {
  if (k < 0 || k > 7) throw UsageError("dihedral: k must be in [0,7]");
  const auto H = cube.height, W = cube.width;
  if ((k & 4) && H != W) throw UsageError("dihedral: transpose needs a square cube");
  HyperspectralCube out(H, W, cube.channels);
  for (std::size_t c = 0; c < cube.channels; ++c) {
    for (std::size_t m = 0; m < H; ++m) {
      for (std::size_t n = 0; n < W; ++n) {
        std::size_t a = (k & 2) ? H - 1 - m : m;
        std::size_t b = (k & 1) ? W - 1 - n : n;
        if (k & 4) std::swap(a, b);
        out.at(c, a, b) = cube.at(c, m, n);
      }
    }
  }
  return out;
}

std::vector<HyperspectralCube> synthesize_many(const SyntheticSpec& spec, std::size_t count, std::uint64_t seed) {
  std::vector<HyperspectralCube> out;
  out.reserve(count);
  std::seed_seq base{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
  std::vector<std::uint32_t> raw(2 * count);
  base.generate(raw.begin(), raw.end());
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(synthesize(spec, (std::uint64_t{raw[2 * i]} << 32) | raw[2 * i + 1]));
  }
  return out;
}

std::vector<std::string> write_dataset(const std::string& dir, const std::vector<HyperspectralCube>& cubes) {
  fs::create_directories(dir);
  std::vector<std::string> paths;
  for (std::size_t i = 0; i < cubes.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "cube_%04zu.hsc", i);
    paths.push_back((fs::path(dir) / name).string());
    io::save_cube(paths.back(), cubes[i]);
  }
  return paths;
}

std::vector<HyperspectralCube> load_dataset(const std::string& dir) {
  if (!fs::is_directory(dir)) throw FormatError("dataset directory " + dir + " does not exist");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".hsc") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  std::vector<HyperspectralCube> cubes;
  for (const auto& f : files) cubes.push_back(io::load_cube(f.string()));
  return cubes;
}

SyntheticSpec parse_geometry(const std::string& text) {
  static const std::regex pattern(R"((\d+)x(\d+)x(\d+))");
  std::smatch match;
  if (!std::regex_match(text, match, pattern)) throw UsageError("geometry must look like HxWxC, got '" + text + "'");
  SyntheticSpec spec;
  spec.height = std::stoul(match[1]);
  spec.width = std::stoul(match[2]);
  spec.channels = std::stoul(match[3]);
  if (spec.height == 0 || spec.width == 0 || spec.channels == 0) throw UsageError("geometry extents must be positive");
  return spec;
}

}  // namespace herosnet::dataset
