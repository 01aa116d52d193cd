#include "herosnet/baselines.hpp"

#include <cmath>
#include <random>

#include "herosnet/error.hpp"

namespace herosnet::baselines {

namespace {

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

NormEstimate power_iteration_norm(const Mask& mask, const DispersionRule& rule, int max_iterations, double tolerance,
                                  std::uint64_t seed) {
  NormEstimate est;
  bool any_open = false;
  for (double v : mask.values) any_open = any_open || v != 0.0;
  if (!any_open) {
    est.zero_operator = true;
    est.converged = true;
    return est;
  }

  const auto H = mask.height, W = mask.width, C = rule.channels();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  HyperspectralCube v(H, W, C);
  for (auto& e : v.values) e = gauss(rng);

  double previous = 0.0;
  for (int it = 1; it <= max_iterations; ++it) {
    const double norm = std::sqrt(dot(v.values, v.values));
    if (norm == 0.0) {
      est.zero_operator = true;
      est.converged = true;
      return est;
    }
    for (auto& e : v.values) e /= norm;
    auto w = cassi::adjoint(cassi::forward(v, mask, rule), mask, rule);
    const double rayleigh = dot(v.values, w.values);
    est.value = rayleigh;
    est.iterations = it;
    if (it > 1 && std::abs(rayleigh - previous) <= tolerance * std::abs(rayleigh)) {
      est.converged = true;
      break;
    }
    previous = rayleigh;
    v = std::move(w);
  }
  return est;
}

double soft_threshold(double v, double tau) {
  if (tau < 0.0) throw UsageError("soft_threshold: tau must be >= 0");
  const double mag = std::abs(v) - tau;
  if (mag <= 0.0) return 0.0;
  return v > 0.0 ? mag : -mag;
}

std::vector<double> soft_threshold(std::span<const double> v, double tau) {
  if (tau < 0.0) throw UsageError("soft_threshold: tau must be >= 0");
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = soft_threshold(v[i], tau);
  return out;
}

HyperspectralCube prox(const HyperspectralCube& r, double tau, ProxKind kind) {
  if (kind == ProxKind::soft_threshold_identity) {
    return HyperspectralCube(r.height, r.width, r.channels, soft_threshold(r.values, tau));
  }
  HyperspectralCube out = r;
  const double s2 = std::sqrt(2.0);
  for (std::size_t c = 0; c < r.channels; ++c) {
    for (std::size_t m = 0; m < r.height; ++m) {
      for (std::size_t n = 0; n + 1 < r.width; n += 2) {
        const double a = r.at(c, m, n), b = r.at(c, m, n + 1);
        const double mean = (a + b) / s2;
        const double detail = soft_threshold((a - b) / s2, tau);
        out.at(c, m, n) = (mean + detail) / s2;
        out.at(c, m, n + 1) = (mean - detail) / s2;
      }
    }
  }
  return out;
}

double prior_value(const HyperspectralCube& x, ProxKind kind) {
  double acc = 0.0;
  if (kind == ProxKind::soft_threshold_identity) {
    for (double v : x.values) acc += std::abs(v);
    return acc;
  }
  const double s2 = std::sqrt(2.0);
  for (std::size_t c = 0; c < x.channels; ++c) {
    for (std::size_t m = 0; m < x.height; ++m) {
      for (std::size_t n = 0; n + 1 < x.width; n += 2) acc += std::abs(x.at(c, m, n) - x.at(c, m, n + 1)) / s2;
    }
  }
  return acc;
}

double ista_objective(const HyperspectralCube& x, const Measurement& y, const Mask& mask, const DispersionRule& rule,
                      double lambda, ProxKind kind) {
  const auto fx = cassi::forward(x, mask, rule);
  double se = 0.0;
  for (std::size_t i = 0; i < fx.values.size(); ++i) {
    const double d = y.values[i] - fx.values[i];
    se += d * d;
  }
  return 0.5 * se + (lambda != 0.0 ? lambda * prior_value(x, kind) : 0.0);
}

IstaResult ista_reconstruct(const Measurement& y, const Mask& mask, const DispersionRule& rule,
                            const IstaConfig& cfg) {
  if (!(cfg.rho > 0.0)) throw UsageError("ista: rho must be > 0");
  if (cfg.lambda < 0.0) throw UsageError("ista: lambda must be >= 0");
  if (cfg.iterations < 0) throw UsageError("ista: iterations must be >= 0");

  IstaResult result;
  result.operator_norm = power_iteration_norm(mask, rule);
  result.unsafe_step = !result.operator_norm.zero_operator && cfg.rho * result.operator_norm.value > 1.0;

  result.x = cassi::init_split(y, rule, mask.width);
  result.objective.reserve(static_cast<std::size_t>(cfg.iterations) + 1);
  result.objective.push_back(ista_objective(result.x, y, mask, rule, cfg.lambda, cfg.prox));
  for (int k = 0; k < cfg.iterations; ++k) {
    auto residual = cassi::forward(result.x, mask, rule);
    for (std::size_t i = 0; i < residual.values.size(); ++i) residual.values[i] -= y.values[i];
    const auto grad = cassi::adjoint(residual, mask, rule);
    HyperspectralCube r = result.x;
    for (std::size_t i = 0; i < r.values.size(); ++i) r.values[i] -= cfg.rho * grad.values[i];
    result.x = prox(r, cfg.rho * cfg.lambda, cfg.prox);
    result.objective.push_back(ista_objective(result.x, y, mask, rule, cfg.lambda, cfg.prox));
  }
  return result;
}

}  // namespace herosnet::baselines
