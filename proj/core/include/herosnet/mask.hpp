#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "herosnet/cassi.hpp"
#include "herosnet/tensor.hpp"

namespace herosnet {

inline constexpr double kDefaultMaskMean = 0.0;
inline constexpr double kDefaultMaskSigma = 0.1;

/// Learnable coded aperture: a continuous latent pattern and its binarization.
///
/// `mu_b` is both the mean of the Gaussian the latent is drawn from and the
/// binarization threshold. The latent tensor is a trainable leaf; the binary
/// mask is recomputed from it on demand, so the two never disagree.
class MaskPair {
 public:
  MaskPair() = default;
  MaskPair(Tensor latent, double mu_b, double sigma_b);

  std::size_t height() const { return latent_.dim(0); }
  std::size_t width() const { return latent_.dim(1); }
  double mu_b() const { return mu_b_; }
  double sigma_b() const { return sigma_b_; }

  /// [H,W] trainable leaf.
  Tensor& latent() { return latent_; }
  const Tensor& latent() const { return latent_; }

  Mask binary() const;

  /// Straight-through binarized mask as a [1,1,H,W] graph node.
  Tensor binary_tensor() const;

 private:
  Tensor latent_;
  double mu_b_ = kDefaultMaskMean;
  double sigma_b_ = kDefaultMaskSigma;
};

/// Latent ~ N(mu_b, sigma_b^2) i.i.d., deterministic in `seed`.
MaskPair init_latent(std::size_t height, std::size_t width, double mu_b, double sigma_b, std::uint64_t seed);

inline int binary_sign(double z, double mu_b) { return z >= mu_b ? 1 : 0; }

/// Measurement of `cube` through the binarized mask; gradients reach the
/// latent through the straight-through path.
Tensor compress(const Tensor& cube, const MaskPair& mask, const DispersionRule& rule);
Measurement compress(const HyperspectralCube& cube, const MaskPair& mask, const DispersionRule& rule,
                     double noise_sigma, std::uint64_t noise_seed = 0);

// Text mask format:
//   MASK1
//   <H> <W>
//   H rows of W space-separated 0/1 digits
void write_mask_text(std::ostream& os, const Mask& mask);
Mask read_mask_text(std::istream& is);
void save_mask(const std::string& path, const Mask& mask);
Mask load_mask(const std::string& path);

}  // namespace herosnet
