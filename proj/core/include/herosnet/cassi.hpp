#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "herosnet/tensor.hpp"

namespace herosnet {

/// H x W x C spectral cube stored band-major: value(c, m, n) lives at
/// (c * H + m) * W + n, which is also the layout of a [1,C,H,W] tensor.
struct HyperspectralCube {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::vector<double> values;

  HyperspectralCube() = default;
  HyperspectralCube(std::size_t h, std::size_t w, std::size_t c, double fill = 0.0);
  HyperspectralCube(std::size_t h, std::size_t w, std::size_t c, std::vector<double> v);

  double& at(std::size_t c, std::size_t m, std::size_t n) { return values[(c * height + m) * width + n]; }
  double at(std::size_t c, std::size_t m, std::size_t n) const { return values[(c * height + m) * width + n]; }

  Tensor to_tensor(bool requires_grad = false) const;
  static HyperspectralCube from_tensor(const Tensor& t, std::size_t batch_index = 0);
};

/// H x (W + C - 1) snapshot, row-major.
struct Measurement {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Measurement() = default;
  Measurement(std::size_t h, std::size_t w, double fill = 0.0);
  Measurement(std::size_t h, std::size_t w, std::vector<double> v);

  double& at(std::size_t m, std::size_t n) { return values[m * width + n]; }
  double at(std::size_t m, std::size_t n) const { return values[m * width + n]; }

  Tensor to_tensor(bool requires_grad = false) const;
  static Measurement from_tensor(const Tensor& t, std::size_t batch_index = 0);
};

/// Coded aperture, row-major H x W. Physical masks are binary, but the
/// operators accept any real pattern.
struct Mask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> values;

  Mask() = default;
  Mask(std::size_t h, std::size_t w, double fill = 0.0);
  Mask(std::size_t h, std::size_t w, std::vector<double> v);

  static Mask ones(std::size_t h, std::size_t w) { return Mask(h, w, 1.0); }
  static Mask bernoulli(std::size_t h, std::size_t w, double p, std::uint64_t seed);

  bool is_binary() const;
  double at(std::size_t m, std::size_t n) const { return values[m * width + n]; }

  /// [1,1,H,W] tensor, broadcastable over the bands of a [B,C,H,W] cube.
  Tensor to_tensor(bool requires_grad = false) const;
};

/// Per-band column offsets of the disperser.
struct DispersionRule {
  std::vector<int> shifts;

  /// d_c = c, giving a measurement width of W + C - 1.
  static DispersionRule unit(std::size_t channels);

  std::size_t channels() const { return shifts.size(); }
  std::size_t extra_width() const;
  /// Throws UsageError unless shifts start at 0, never decrease and end at C-1.
  void validate() const;
};

namespace cassi {

HyperspectralCube modulate(const HyperspectralCube& cube, const Mask& mask);
Measurement disperse_sum(const HyperspectralCube& cube, const DispersionRule& rule);

/// y = Phi x + n with i.i.d. Gaussian noise of std-dev `noise_sigma`
/// drawn from a generator seeded with `noise_seed`.
Measurement forward(const HyperspectralCube& cube, const Mask& mask, const DispersionRule& rule,
                    double noise_sigma = 0.0, std::uint64_t noise_seed = 0);

/// Exact adjoint of the noiseless forward operator.
HyperspectralCube adjoint(const Measurement& meas, const Mask& mask, const DispersionRule& rule);

/// Band c of the result is the W-wide window of `meas` starting at column d_c.
/// A nonzero `expected_width` is checked against meas.width - span.
HyperspectralCube init_split(const Measurement& meas, const DispersionRule& rule, std::size_t expected_width = 0);

/// Explicit sensing matrix, row-major, rows = H*(W+span), cols = H*W*C.
/// Column (c*H + m)*W + n holds M(m,n) at row m*(W+span) + n + d_c.
struct DenseMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }
  std::vector<double> multiply(const std::vector<double>& x) const;
  std::vector<double> multiply_transposed(const std::vector<double>& y) const;
};

inline constexpr std::size_t kDensePhiLimit = 65536;

/// Throws UsageError when H*W*C exceeds kDensePhiLimit.
DenseMatrix dense_phi(const Mask& mask, const DispersionRule& rule, std::size_t height, std::size_t width,
                      std::size_t channels);

// Differentiable counterparts on [B,C,H,W] / [B,1,H,W'] tensors. The mask
// tensor is [1,1,H,W].
Tensor modulate(const Tensor& cube, const Tensor& mask);
Tensor forward(const Tensor& cube, const Tensor& mask, const DispersionRule& rule);
Tensor adjoint(const Tensor& meas, const Tensor& mask, const DispersionRule& rule);
Tensor init_split(const Tensor& meas, const DispersionRule& rule);

}  // namespace cassi
}  // namespace herosnet
