#include "herosnet/mask.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include "herosnet/error.hpp"
#include "herosnet/ops.hpp"

namespace herosnet {

MaskPair::MaskPair(Tensor latent, double mu_b, double sigma_b)
    : latent_(std::move(latent)), mu_b_(mu_b), sigma_b_(sigma_b) {
  if (latent_.rank() != 2) throw ShapeError("mask latent must be [H,W], got " + shape_to_string(latent_.shape()));
}

Mask MaskPair::binary() const {
  Mask m(height(), width());
  const auto v = latent_.values();
  for (std::size_t i = 0; i < v.size(); ++i) m.values[i] = binary_sign(v[i], mu_b_);
  return m;
}

Tensor MaskPair::binary_tensor() const {
  return ops::reshape(ops::binarize_ste(latent_, mu_b_), {1, 1, height(), width()});
}

MaskPair init_latent(std::size_t height, std::size_t width, double mu_b, double sigma_b, std::uint64_t seed) {
  if (!(sigma_b > 0.0)) throw UsageError("sigma_b must be > 0");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(mu_b, sigma_b);
  std::vector<double> v(height * width);
  for (auto& e : v) e = gauss(rng);
  return MaskPair(Tensor::from({height, width}, std::move(v), true), mu_b, sigma_b);
}

Tensor compress(const Tensor& cube, const MaskPair& mask, const DispersionRule& rule) {
  return cassi::forward(cube, mask.binary_tensor(), rule);
}

Measurement compress(const HyperspectralCube& cube, const MaskPair& mask, const DispersionRule& rule,
                     double noise_sigma, std::uint64_t noise_seed) {
  return cassi::forward(cube, mask.binary(), rule, noise_sigma, noise_seed);
}

void write_mask_text(std::ostream& os, const Mask& mask) {
  if (!mask.is_binary()) throw UsageError("only binary masks can be written in MASK1 format");
  os << "MASK1\n" << mask.height << ' ' << mask.width << '\n';
  for (std::size_t m = 0; m < mask.height; ++m) {
    for (std::size_t n = 0; n < mask.width; ++n) {
      if (n) os << ' ';
      os << (mask.at(m, n) != 0.0 ? '1' : '0');
    }
    os << '\n';
  }
}

Mask read_mask_text(std::istream& is) {
  std::string magic;
  if (!(is >> magic) || magic != "MASK1") throw FormatError("mask: missing MASK1 header");
  long long h = 0, w = 0;
  if (!(is >> h >> w) || h <= 0 || w <= 0) throw FormatError("mask: bad height/width");
  Mask mask(static_cast<std::size_t>(h), static_cast<std::size_t>(w));
  for (auto& v : mask.values) {
    int bit = -1;
    if (!(is >> bit) || (bit != 0 && bit != 1)) throw FormatError("mask: entries must be 0 or 1");
    v = bit;
  }
  std::string extra;
  if (is >> extra) throw FormatError("mask: trailing data after " + std::to_string(h) + " rows");
  return mask;
}

void save_mask(const std::string& path, const Mask& mask) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path + " for writing");
  write_mask_text(os, mask);
}

Mask load_mask(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open mask file " + path);
  return read_mask_text(is);
}

}  // namespace herosnet
