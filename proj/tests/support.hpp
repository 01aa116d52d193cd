#pragma once

// Oracles and finite-difference helpers shared by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "herosnet/cassi.hpp"
#include "herosnet/ops.hpp"
#include "herosnet/tensor.hpp"

namespace testsupport {

using herosnet::Shape;
using herosnet::Tensor;

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0,
                            bool requires_grad = true) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(herosnet::shape_numel(shape));
  for (auto& x : v) x = u(rng);
  return Tensor::from(shape, std::move(v), requires_grad);
}

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

inline herosnet::Mask random_binary_mask(std::size_t h, std::size_t w, std::mt19937_64& rng) {
  std::bernoulli_distribution b(0.5);
  herosnet::Mask m(h, w);
  for (auto& v : m.values) v = b(rng) ? 1.0 : 0.0;
  return m;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Worst entrywise |a - n| / max(|a|, |n|, floor) between the autodiff
/// gradient of L = <f(inputs), w> and central differences, over every input.
/// `w` is a fixed random projection so the check sees all output entries.
struct FdResult {
  double worst = 0.0;
  double worst_analytic = 0.0, worst_numeric = 0.0;
  std::size_t checked = 0;
};

inline FdResult fd_check(const std::function<Tensor(const std::vector<Tensor>&)>& f, std::vector<Tensor> inputs,
                         std::mt19937_64& rng, double h = 1e-5, double floor = 1e-6) {
  const Tensor probe = f(inputs);
  const Tensor w = random_tensor(probe.shape(), rng, -1.0, 1.0, false);
  auto loss = [&]() { return herosnet::ops::sum(herosnet::ops::mul(f(inputs), w)); };

  herosnet::backward(loss());
  std::vector<std::vector<double>> analytic;
  for (const auto& t : inputs) {
    if (t.has_grad()) analytic.emplace_back(t.grad().begin(), t.grad().end());
    else analytic.emplace_back(t.numel(), 0.0);
  }

  FdResult r;
  herosnet::NoGradGuard guard;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (!inputs[k].requires_grad()) continue;
    auto v = inputs[k].mutable_values();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double saved = v[i];
      v[i] = saved + h;
      const double up = loss().item();
      v[i] = saved - h;
      const double down = loss().item();
      v[i] = saved;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[k][i];
      const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      if (err > r.worst) {
        r.worst = err;
        r.worst_analytic = a;
        r.worst_numeric = numeric;
      }
      ++r.checked;
    }
  }
  return r;
}

/// Direct nested-loop convolution (cross-correlation), zero padding.
inline std::vector<double> naive_conv2d(const Tensor& x, const Tensor& w, const Tensor& b, int stride, int pad) {
  const auto B = x.dim(0), Cin = x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto Cout = w.dim(0), kh = w.dim(2), kw = w.dim(3);
  const auto Ho = (H + 2 * pad - kh) / stride + 1, Wo = (W + 2 * pad - kw) / stride + 1;
  const auto xv = x.values(), wv = w.values(), bv = b.values();
  std::vector<double> out(B * Cout * Ho * Wo, 0.0);
  for (std::size_t n = 0; n < B; ++n)
    for (std::size_t co = 0; co < Cout; ++co)
      for (std::size_t i = 0; i < Ho; ++i)
        for (std::size_t j = 0; j < Wo; ++j) {
          double acc = bv[co];
          for (std::size_t ci = 0; ci < Cin; ++ci)
            for (std::size_t p = 0; p < kh; ++p)
              for (std::size_t q = 0; q < kw; ++q) {
                const long r = long(i * stride + p) - pad, c = long(j * stride + q) - pad;
                if (r < 0 || c < 0 || r >= long(H) || c >= long(W)) continue;
                acc += xv[((n * Cin + ci) * H + r) * W + c] * wv[((co * Cin + ci) * kh + p) * kw + q];
              }
          out[((n * Cout + co) * Ho + i) * Wo + j] = acc;
        }
  return out;
}

/// K plain gradient steps x <- x - rho * Phi^T (Phi x - y) on the dense matrix.
inline std::vector<double> dense_gradient_steps(const herosnet::cassi::DenseMatrix& phi, std::vector<double> x,
                                                const std::vector<double>& y, double rho, int steps) {
  for (int k = 0; k < steps; ++k) {
    auto r = phi.multiply(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] -= y[i];
    const auto g = phi.multiply_transposed(r);
    for (std::size_t i = 0; i < x.size(); ++i) x[i] -= rho * g[i];
  }
  return x;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testsupport
