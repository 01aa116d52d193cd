#include "herosnet/cassi.hpp"

#include <random>

#include "herosnet/error.hpp"
#include "herosnet/ops.hpp"

namespace herosnet {

HyperspectralCube::HyperspectralCube(std::size_t h, std::size_t w, std::size_t c, double fill)
    : height(h), width(w), channels(c), values(h * w * c, fill) {
  if (h == 0 || w == 0 || c == 0) throw ShapeError("cube extents must be >= 1");
}

HyperspectralCube::HyperspectralCube(std::size_t h, std::size_t w, std::size_t c, std::vector<double> v)
    : height(h), width(w), channels(c), values(std::move(v)) {
  if (h == 0 || w == 0 || c == 0) throw ShapeError("cube extents must be >= 1");
  if (values.size() != h * w * c) throw ShapeError("cube payload does not match H*W*C");
}

Tensor HyperspectralCube::to_tensor(bool requires_grad) const {
  return Tensor::from({1, channels, height, width}, values, requires_grad);
}

HyperspectralCube HyperspectralCube::from_tensor(const Tensor& t, std::size_t batch_index) {
  if (t.rank() != 4 || batch_index >= t.dim(0)) throw ShapeError("cube tensor must be [B,C,H,W]");
  const auto per = t.dim(1) * t.dim(2) * t.dim(3);
  const auto v = t.values().subspan(batch_index * per, per);
  return HyperspectralCube(t.dim(2), t.dim(3), t.dim(1), std::vector<double>(v.begin(), v.end()));
}

Measurement::Measurement(std::size_t h, std::size_t w, double fill) : height(h), width(w), values(h * w, fill) {
  if (h == 0 || w == 0) throw ShapeError("measurement extents must be >= 1");
}

Measurement::Measurement(std::size_t h, std::size_t w, std::vector<double> v)
    : height(h), width(w), values(std::move(v)) {
  if (h == 0 || w == 0) throw ShapeError("measurement extents must be >= 1");
  if (values.size() != h * w) throw ShapeError("measurement payload does not match H*width");
}

Tensor Measurement::to_tensor(bool requires_grad) const {
  return Tensor::from({1, 1, height, width}, values, requires_grad);
}

Measurement Measurement::from_tensor(const Tensor& t, std::size_t batch_index) {
  if (t.rank() != 4 || t.dim(1) != 1 || batch_index >= t.dim(0)) {
    throw ShapeError("measurement tensor must be [B,1,H,W']");
  }
  const auto per = t.dim(2) * t.dim(3);
  const auto v = t.values().subspan(batch_index * per, per);
  return Measurement(t.dim(2), t.dim(3), std::vector<double>(v.begin(), v.end()));
}

Mask::Mask(std::size_t h, std::size_t w, double fill) : height(h), width(w), values(h * w, fill) {
  if (h == 0 || w == 0) throw ShapeError("mask extents must be >= 1");
}

Mask::Mask(std::size_t h, std::size_t w, std::vector<double> v) : height(h), width(w), values(std::move(v)) {
  if (h == 0 || w == 0) throw ShapeError("mask extents must be >= 1");
  if (values.size() != h * w) throw ShapeError("mask payload does not match H*W");
}

Mask Mask::bernoulli(std::size_t h, std::size_t w, double p, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(p);
  Mask m(h, w);
  for (auto& v : m.values) v = coin(rng) ? 1.0 : 0.0;
  return m;
}

bool Mask::is_binary() const {
  for (double v : values) {
    if (v != 0.0 && v != 1.0) return false;
  }
  return true;
}

Tensor Mask::to_tensor(bool requires_grad) const { return Tensor::from({1, 1, height, width}, values, requires_grad); }

DispersionRule DispersionRule::unit(std::size_t channels) {
  DispersionRule rule;
  rule.shifts.resize(channels);
  for (std::size_t c = 0; c < channels; ++c) rule.shifts[c] = static_cast<int>(c);
  return rule;
}

std::size_t DispersionRule::extra_width() const {
  return shifts.empty() ? 0 : static_cast<std::size_t>(shifts.back());
}

void DispersionRule::validate() const {
  if (shifts.empty()) throw UsageError("dispersion rule has no bands");
  if (shifts.front() != 0) throw UsageError("first band shift must be 0");
  for (std::size_t c = 1; c < shifts.size(); ++c) {
    if (shifts[c] < shifts[c - 1]) throw UsageError("band shifts must be nondecreasing");
  }
  if (static_cast<std::size_t>(shifts.back()) != shifts.size() - 1) {
    throw UsageError("last band shift must equal C-1");
  }
}

namespace cassi {

namespace {

void check_mask(const Mask& mask, std::size_t h, std::size_t w) {
  if (mask.height != h || mask.width != w) {
    throw ShapeError("mask is " + std::to_string(mask.height) + "x" + std::to_string(mask.width) +
                     " but cube is " + std::to_string(h) + "x" + std::to_string(w));
  }
}

}  // namespace

HyperspectralCube modulate(const HyperspectralCube& cube, const Mask& mask) {
  check_mask(mask, cube.height, cube.width);
  NoGradGuard guard;
  return HyperspectralCube::from_tensor(modulate(cube.to_tensor(), mask.to_tensor()));
}

Measurement disperse_sum(const HyperspectralCube& cube, const DispersionRule& rule) {
  NoGradGuard guard;
  return Measurement::from_tensor(ops::shift_sum(cube.to_tensor(), rule.shifts));
}

Measurement forward(const HyperspectralCube& cube, const Mask& mask, const DispersionRule& rule, double noise_sigma,
                    std::uint64_t noise_seed) {
  if (noise_sigma < 0.0) throw UsageError("noise_sigma must be >= 0");
  auto y = disperse_sum(modulate(cube, mask), rule);
  if (noise_sigma > 0.0) {
    std::mt19937_64 rng(noise_seed);
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (auto& v : y.values) v += noise(rng);
  }
  return y;
}

HyperspectralCube adjoint(const Measurement& meas, const Mask& mask, const DispersionRule& rule) {
  if (meas.width < rule.extra_width() + 1) throw ShapeError("measurement narrower than the dispersion span");
  check_mask(mask, meas.height, meas.width - rule.extra_width());
  NoGradGuard guard;
  return HyperspectralCube::from_tensor(adjoint(meas.to_tensor(), mask.to_tensor(), rule));
}

HyperspectralCube init_split(const Measurement& meas, const DispersionRule& rule, std::size_t expected_width) {
  if (meas.width < rule.extra_width() + 1) throw ShapeError("measurement narrower than the dispersion span");
  if (expected_width != 0 && meas.width != expected_width + rule.extra_width()) {
    throw ShapeError("init_split: measurement width " + std::to_string(meas.width) + " != W+C-1 = " +
                     std::to_string(expected_width + rule.extra_width()));
  }
  NoGradGuard guard;
  return HyperspectralCube::from_tensor(init_split(meas.to_tensor(), rule));
}

std::vector<double> DenseMatrix::multiply(const std::vector<double>& x) const {
  if (x.size() != cols) throw ShapeError("dense multiply: vector length mismatch");
  std::vector<double> y(rows, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double acc = 0.0;
    for (std::size_t c = 0; c < cols; ++c) acc += values[r * cols + c] * x[c];
    y[r] = acc;
  }
  return y;
}

std::vector<double> DenseMatrix::multiply_transposed(const std::vector<double>& y) const {
  if (y.size() != rows) throw ShapeError("dense transposed multiply: vector length mismatch");
  std::vector<double> x(cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) x[c] += values[r * cols + c] * y[r];
  }
  return x;
}

DenseMatrix dense_phi(const Mask& mask, const DispersionRule& rule, std::size_t height, std::size_t width,
                      std::size_t channels) {
  if (height * width * channels > kDensePhiLimit) {
    throw UsageError("dense_phi: H*W*C = " + std::to_string(height * width * channels) + " exceeds " +
                     std::to_string(kDensePhiLimit));
  }
  if (rule.channels() != channels) throw ShapeError("dense_phi: dispersion rule band count mismatch");
  check_mask(mask, height, width);
  const auto wm = width + rule.extra_width();
  DenseMatrix phi;
  phi.rows = height * wm;
  phi.cols = height * width * channels;
  phi.values.assign(phi.rows * phi.cols, 0.0);
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t m = 0; m < height; ++m) {
      for (std::size_t n = 0; n < width; ++n) {
        const auto col = (c * height + m) * width + n;
        const auto row = m * wm + n + static_cast<std::size_t>(rule.shifts[c]);
        phi.values[row * phi.cols + col] = mask.at(m, n);
      }
    }
  }
  return phi;
}

Tensor modulate(const Tensor& cube, const Tensor& mask) {
  if (cube.rank() != 4 || mask.rank() != 4 || mask.dim(2) != cube.dim(2) || mask.dim(3) != cube.dim(3)) {
    throw ShapeError("modulate: mask " + shape_to_string(mask.shape()) + " does not match cube " +
                     shape_to_string(cube.shape()));
  }
  return ops::mul(cube, mask);
}

Tensor forward(const Tensor& cube, const Tensor& mask, const DispersionRule& rule) {
  return ops::shift_sum(modulate(cube, mask), rule.shifts);
}

Tensor adjoint(const Tensor& meas, const Tensor& mask, const DispersionRule& rule) {
  if (meas.rank() != 4 || meas.dim(3) < rule.extra_width() + 1) {
    throw ShapeError("adjoint: measurement " + shape_to_string(meas.shape()) + " incompatible with dispersion");
  }
  const auto width = meas.dim(3) - rule.extra_width();
  return modulate(ops::shift_split(meas, rule.shifts, width), mask);
}

Tensor init_split(const Tensor& meas, const DispersionRule& rule) {
  if (meas.rank() != 4 || meas.dim(3) < rule.extra_width() + 1) {
    throw ShapeError("init_split: measurement " + shape_to_string(meas.shape()) + " incompatible with dispersion");
  }
  return ops::shift_split(meas, rule.shifts, meas.dim(3) - rule.extra_width());
}

}  // namespace cassi
}  // namespace herosnet
