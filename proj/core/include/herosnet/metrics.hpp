#pragma once

#include "herosnet/cassi.hpp"

namespace herosnet::metrics {

/// Reported in place of +inf when the two cubes are identical.
inline constexpr double kPsnrCap = 99.0;

/// 10*log10(peak^2 / MSE) over all H*W*C entries, capped at kPsnrCap.
double psnr(const HyperspectralCube& x, const HyperspectralCube& ref, double peak = 1.0);

/// Mean SSIM per band (11x11 Gaussian window, sigma 1.5, K1 0.01, K2 0.03,
/// dynamic range 1), averaged over bands. Bands smaller than 11 pixels in
/// either direction use one uniform window covering the whole band.
double ssim(const HyperspectralCube& x, const HyperspectralCube& ref);

}  // namespace herosnet::metrics
