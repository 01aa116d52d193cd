#include "herosnet/metrics.hpp"

#include <array>
#include <cmath>
#include <string>

#include "herosnet/error.hpp"

namespace herosnet::metrics {

namespace {

void check_same_geometry(const HyperspectralCube& x, const HyperspectralCube& ref) {
  if (x.height != ref.height || x.width != ref.width || x.channels != ref.channels) {
    auto dims = [](const HyperspectralCube& c) {
      return std::to_string(c.height) + "x" + std::to_string(c.width) + "x" + std::to_string(c.channels);
    };
    throw ShapeError("metric inputs differ in shape: " + dims(x) + " vs " + dims(ref));
  }
}

constexpr std::size_t kWindow = 11;
constexpr double kSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;
constexpr double kRange = 1.0;

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  const double c = (kWindow - 1) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < kWindow; ++i) {
    for (std::size_t j = 0; j < kWindow; ++j) {
      const double dy = static_cast<double>(i) - c, dx = static_cast<double>(j) - c;
      w[i * kWindow + j] = std::exp(-(dx * dx + dy * dy) / (2.0 * kSigma * kSigma));
      total += w[i * kWindow + j];
    }
  }
  for (auto& v : w) v /= total;
  return w;
}

struct LocalStats {
  double mx = 0, my = 0, xx = 0, yy = 0, xy = 0;
};

double ssim_index(const LocalStats& s) {
  const double c1 = (kK1 * kRange) * (kK1 * kRange);
  const double c2 = (kK2 * kRange) * (kK2 * kRange);
  const double vx = s.xx - s.mx * s.mx;
  const double vy = s.yy - s.my * s.my;
  const double cov = s.xy - s.mx * s.my;
  return ((2.0 * s.mx * s.my + c1) * (2.0 * cov + c2)) / ((s.mx * s.mx + s.my * s.my + c1) * (vx + vy + c2));
}

double band_ssim(const double* x, const double* y, std::size_t H, std::size_t W) {
  if (H < kWindow || W < kWindow) {
    LocalStats s;
    const double inv = 1.0 / static_cast<double>(H * W);
    for (std::size_t i = 0; i < H * W; ++i) {
      s.mx += x[i];
      s.my += y[i];
      s.xx += x[i] * x[i];
      s.yy += y[i] * y[i];
      s.xy += x[i] * y[i];
    }
    s.mx *= inv;
    s.my *= inv;
    s.xx *= inv;
    s.yy *= inv;
    s.xy *= inv;
    return ssim_index(s);
  }
  static const auto window = gaussian_window();
  double total = 0.0;
  for (std::size_t r = 0; r + kWindow <= H; ++r) {
    for (std::size_t c = 0; c + kWindow <= W; ++c) {
      LocalStats s;
      for (std::size_t i = 0; i < kWindow; ++i) {
        for (std::size_t j = 0; j < kWindow; ++j) {
          const double w = window[i * kWindow + j];
          const double a = x[(r + i) * W + c + j], b = y[(r + i) * W + c + j];
          s.mx += w * a;
          s.my += w * b;
          s.xx += w * a * a;
          s.yy += w * b * b;
          s.xy += w * a * b;
        }
      }
      total += ssim_index(s);
    }
  }
  return total / static_cast<double>((H - kWindow + 1) * (W - kWindow + 1));
}

}  // namespace

double psnr(const HyperspectralCube& x, const HyperspectralCube& ref, double peak) {
  check_same_geometry(x, ref);
  double se = 0.0;
  for (std::size_t i = 0; i < x.values.size(); ++i) {
    const double d = x.values[i] - ref.values[i];
    se += d * d;
  }
  const double mse = se / static_cast<double>(x.values.size());
  if (mse == 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(peak * peak / mse));
}

double ssim(const HyperspectralCube& x, const HyperspectralCube& ref) {
  check_same_geometry(x, ref);
  const auto plane = x.height * x.width;
  double total = 0.0;
  for (std::size_t c = 0; c < x.channels; ++c) {
    total += band_ssim(x.values.data() + c * plane, ref.values.data() + c * plane, x.height, x.width);
  }
  return total / static_cast<double>(x.channels);
}

}  // namespace herosnet::metrics
