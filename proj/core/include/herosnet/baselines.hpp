#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "herosnet/cassi.hpp"

namespace herosnet::baselines {

enum class ProxKind {
  /// psi(x) = ||x||_1, prox is elementwise soft thresholding.
  soft_threshold_identity,
  /// psi(x) = sum |x[2j] - x[2j+1]| / sqrt(2) over horizontal pixel pairs.
  /// The pair transform is orthonormal Haar, so the prox is exact.
  soft_threshold_diff,
};

struct IstaConfig {
  int iterations = 100;
  double lambda = 0.0;
  double rho = 1.0;
  ProxKind prox = ProxKind::soft_threshold_identity;
};

struct NormEstimate {
  double value = 0.0;     // estimate of the largest eigenvalue of Phi^T Phi
  int iterations = 0;
  bool converged = false;
  bool zero_operator = false;  // warning: the mask blocks every pixel
};

/// Power iteration on Phi^T Phi using the operator form of Phi. Stops once
/// the Rayleigh quotient changes by less than `tolerance` (relative).
NormEstimate power_iteration_norm(const Mask& mask, const DispersionRule& rule, int max_iterations = 5000,
                                  double tolerance = 1e-8, std::uint64_t seed = 7);

/// sign(v) * max(|v| - tau, 0). Throws UsageError for tau < 0.
double soft_threshold(double v, double tau);
std::vector<double> soft_threshold(std::span<const double> v, double tau);

/// Exact prox of tau * psi for the chosen prior.
HyperspectralCube prox(const HyperspectralCube& r, double tau, ProxKind kind);
double prior_value(const HyperspectralCube& x, ProxKind kind);

/// 0.5 * ||y - Phi x||^2 + lambda * psi(x)
double ista_objective(const HyperspectralCube& x, const Measurement& y, const Mask& mask, const DispersionRule& rule,
                      double lambda, ProxKind kind);

struct IstaResult {
  HyperspectralCube x;
  /// objective[k] is evaluated at iterate k; objective[0] at init_split(y).
  std::vector<double> objective;
  NormEstimate operator_norm;
  /// rho exceeded 1/||Phi||^2, so monotone decrease is not guaranteed.
  bool unsafe_step = false;
};

IstaResult ista_reconstruct(const Measurement& y, const Mask& mask, const DispersionRule& rule,
                            const IstaConfig& cfg);

}  // namespace herosnet::baselines
