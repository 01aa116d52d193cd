#include "herosnet/ops.hpp"

#include <algorithm>
#include <cmath>

#include "herosnet/error.hpp"

namespace herosnet::ops {

namespace {

using detail::Node;

bool wants_grad(const Node& n) { return n.requires_grad; }

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank) {
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_to_string(t.shape()));
  }
}

// Broadcast bookkeeping for binary elementwise ops.
struct Broadcast {
  Shape out;
  std::vector<std::size_t> stride_a, stride_b;
};

std::vector<std::size_t> contiguous_strides(const Shape& shape) {
  std::vector<std::size_t> s(shape.size(), 1);
  for (std::size_t i = shape.size(); i-- > 1;) s[i - 1] = s[i] * shape[i];
  return s;
}

Broadcast plan_broadcast(const Shape& a, const Shape& b, const char* what) {
  if (a.size() != b.size()) {
    throw ShapeError(std::string(what) + ": rank mismatch " + shape_to_string(a) + " vs " + shape_to_string(b));
  }
  Broadcast plan;
  plan.out.resize(a.size());
  const auto sa = contiguous_strides(a);
  const auto sb = contiguous_strides(b);
  plan.stride_a.resize(a.size());
  plan.stride_b.resize(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] != b[i] && a[i] != 1 && b[i] != 1) {
      throw ShapeError(std::string(what) + ": incompatible shapes " + shape_to_string(a) + " and " +
                       shape_to_string(b));
    }
    plan.out[i] = std::max(a[i], b[i]);
    plan.stride_a[i] = a[i] == 1 ? 0 : sa[i];
    plan.stride_b[i] = b[i] == 1 ? 0 : sb[i];
  }
  return plan;
}

template <class Fn>
void for_each_broadcast(const Broadcast& plan, Fn&& fn) {
  const std::size_t rank = plan.out.size();
  const std::size_t n = shape_numel(plan.out);
  std::vector<std::size_t> idx(rank, 0);
  std::size_t ia = 0, ib = 0;
  for (std::size_t i = 0; i < n; ++i) {
    fn(i, ia, ib);
    for (std::size_t d = rank; d-- > 0;) {
      ia += plan.stride_a[d];
      ib += plan.stride_b[d];
      if (++idx[d] < plan.out[d]) break;
      ia -= plan.stride_a[d] * plan.out[d];
      ib -= plan.stride_b[d] * plan.out[d];
      idx[d] = 0;
    }
  }
}

// Inclusive range of output positions whose tap lands inside [0, extent).
struct TapRange {
  std::ptrdiff_t first, last;
};

TapRange valid_outputs(std::ptrdiff_t extent, std::ptrdiff_t out_extent, std::ptrdiff_t stride,
                       std::ptrdiff_t offset) {
  // input index = o*stride + offset
  std::ptrdiff_t first = offset >= 0 ? 0 : (-offset + stride - 1) / stride;
  std::ptrdiff_t last = (extent - 1 - offset) >= 0 ? (extent - 1 - offset) / stride : -1;
  last = std::min(last, out_extent - 1);
  return {first, last};
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride, int padding) {
  require_rank(input, 4, "conv2d input");
  require_rank(weight, 4, "conv2d weight");
  const auto B = input.dim(0), Ci = input.dim(1), H = input.dim(2), W = input.dim(3);
  const auto Co = weight.dim(0), kh = weight.dim(2), kw = weight.dim(3);
  if (weight.dim(1) != Ci) {
    throw ShapeError("conv2d: input has " + std::to_string(Ci) + " channels but weight expects " +
                     std::to_string(weight.dim(1)) + " (input " + shape_to_string(input.shape()) + ", weight " +
                     shape_to_string(weight.shape()) + ")");
  }
  if (kh % 2 == 0 || kw % 2 == 0) throw ShapeError("conv2d: kernel extents must be odd");
  if (stride < 1 || padding < 0) throw UsageError("conv2d: stride must be >= 1 and padding >= 0");
  if (H + 2 * padding < kh || W + 2 * padding < kw) {
    throw ShapeError("conv2d: input " + shape_to_string(input.shape()) + " smaller than kernel");
  }
  if (bias.defined() && (bias.rank() != 1 || bias.dim(0) != Co)) {
    throw ShapeError("conv2d: bias must be [" + std::to_string(Co) + "], got " + shape_to_string(bias.shape()));
  }
  const std::size_t Ho = (H + 2 * padding - kh) / stride + 1;
  const std::size_t Wo = (W + 2 * padding - kw) / stride + 1;
  const auto s = static_cast<std::ptrdiff_t>(stride);
  const auto p = static_cast<std::ptrdiff_t>(padding);

  // Visits every (input plane, output plane, tap) triple with the valid row
  // and column ranges; `row` gets base offsets of input/output rows.
  auto visit_taps = [=](auto&& row) {
    for (std::size_t ky = 0; ky < kh; ++ky) {
      const auto rows = valid_outputs(H, Ho, s, static_cast<std::ptrdiff_t>(ky) - p);
      for (std::size_t kx = 0; kx < kw; ++kx) {
        const auto cols = valid_outputs(W, Wo, s, static_cast<std::ptrdiff_t>(kx) - p);
        if (cols.first > cols.last) continue;
        for (auto oy = rows.first; oy <= rows.last; ++oy) {
          const auto iy = oy * s + static_cast<std::ptrdiff_t>(ky) - p;
          const auto ix0 = cols.first * s + static_cast<std::ptrdiff_t>(kx) - p;
          row(ky, kx, static_cast<std::size_t>(iy) * W + static_cast<std::size_t>(ix0),
              static_cast<std::size_t>(oy) * Wo + static_cast<std::size_t>(cols.first),
              static_cast<std::size_t>(cols.last - cols.first + 1));
        }
      }
    }
  };

  const auto in = input.values();
  const auto w = weight.values();
  std::vector<double> out(B * Co * Ho * Wo);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t co = 0; co < Co; ++co) {
      double* o = out.data() + (b * Co + co) * Ho * Wo;
      const double bv = bias.defined() ? bias.values()[co] : 0.0;
      std::fill(o, o + Ho * Wo, bv);
      for (std::size_t ci = 0; ci < Ci; ++ci) {
        const double* x = in.data() + (b * Ci + ci) * H * W;
        const double* wk = w.data() + (co * Ci + ci) * kh * kw;
        visit_taps([&](std::size_t ky, std::size_t kx, std::size_t in_off, std::size_t out_off, std::size_t n) {
          const double wv = wk[ky * kw + kx];
          double* orow = o + out_off;
          const double* xrow = x + in_off;
          if (s == 1) {
            for (std::size_t j = 0; j < n; ++j) orow[j] += wv * xrow[j];
          } else {
            for (std::size_t j = 0; j < n; ++j) orow[j] += wv * xrow[j * stride];
          }
        });
      }
    }
  }

  std::vector<Tensor> inputs{input, weight};
  if (bias.defined()) inputs.push_back(bias);
  const bool has_bias = bias.defined();
  return Tensor::make_result(
      {B, Co, Ho, Wo}, std::move(out), std::move(inputs),
      [=](Node& self) {
        Node& in_node = *self.parents[0];
        Node& w_node = *self.parents[1];
        const auto& g = self.grad;
        const auto& xin = in_node.values;
        const auto& wv = w_node.values;
        if (wants_grad(in_node)) {
          auto& gi = in_node.ensure_grad();
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t co = 0; co < Co; ++co) {
              const double* go = g.data() + (b * Co + co) * Ho * Wo;
              for (std::size_t ci = 0; ci < Ci; ++ci) {
                double* gx = gi.data() + (b * Ci + ci) * H * W;
                const double* wk = wv.data() + (co * Ci + ci) * kh * kw;
                visit_taps([&](std::size_t ky, std::size_t kx, std::size_t in_off, std::size_t out_off,
                               std::size_t n) {
                  const double k = wk[ky * kw + kx];
                  double* grow = gx + in_off;
                  const double* orow = go + out_off;
                  if (s == 1) {
                    for (std::size_t j = 0; j < n; ++j) grow[j] += k * orow[j];
                  } else {
                    for (std::size_t j = 0; j < n; ++j) grow[j * stride] += k * orow[j];
                  }
                });
              }
            }
          }
        }
        if (wants_grad(w_node)) {
          auto& gw = w_node.ensure_grad();
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t co = 0; co < Co; ++co) {
              const double* go = g.data() + (b * Co + co) * Ho * Wo;
              for (std::size_t ci = 0; ci < Ci; ++ci) {
                const double* x = xin.data() + (b * Ci + ci) * H * W;
                double* gk = gw.data() + (co * Ci + ci) * kh * kw;
                visit_taps([&](std::size_t ky, std::size_t kx, std::size_t in_off, std::size_t out_off,
                               std::size_t n) {
                  const double* xrow = x + in_off;
                  const double* orow = go + out_off;
                  double acc[4] = {0.0, 0.0, 0.0, 0.0};
                  std::size_t j = 0;
                  if (s == 1) {
                    for (; j + 4 <= n; j += 4) {
                      acc[0] += orow[j] * xrow[j];
                      acc[1] += orow[j + 1] * xrow[j + 1];
                      acc[2] += orow[j + 2] * xrow[j + 2];
                      acc[3] += orow[j + 3] * xrow[j + 3];
                    }
                    for (; j < n; ++j) acc[0] += orow[j] * xrow[j];
                  } else {
                    for (; j < n; ++j) acc[0] += orow[j] * xrow[j * stride];
                  }
                  gk[ky * kw + kx] += (acc[0] + acc[1]) + (acc[2] + acc[3]);
                });
              }
            }
          }
        }
        if (has_bias && wants_grad(*self.parents[2])) {
          auto& gb = self.parents[2]->ensure_grad();
          for (std::size_t b = 0; b < B; ++b) {
            for (std::size_t co = 0; co < Co; ++co) {
              const double* go = g.data() + (b * Co + co) * Ho * Wo;
              double acc = 0.0;
              for (std::size_t j = 0; j < Ho * Wo; ++j) acc += go[j];
              gb[co] += acc;
            }
          }
        }
      });
}

Tensor relu(const Tensor& x) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] > 0.0 ? v[i] : 0.0;
  return Tensor::make_result(x.shape(), std::move(out), {x}, [](Node& self) {
    Node& in = *self.parents[0];
    auto& gi = in.ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) {
      if (in.values[i] > 0.0) gi[i] += self.grad[i];
    }
  });
}

Tensor sigmoid(const Tensor& x) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    // Evaluated so that neither branch overflows.
    if (v[i] >= 0.0) {
      out[i] = 1.0 / (1.0 + std::exp(-v[i]));
    } else {
      const double e = std::exp(v[i]);
      out[i] = e / (1.0 + e);
    }
  }
  return Tensor::make_result(x.shape(), out, {x}, [y = out](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i] * y[i] * (1.0 - y[i]);
  });
}

Tensor reciprocal(const Tensor& x) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i] == 0.0) throw UsageError("reciprocal: zero entry at index " + std::to_string(i));
    out[i] = 1.0 / v[i];
  }
  return Tensor::make_result(x.shape(), out, {x}, [y = out](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] -= self.grad[i] * y[i] * y[i];
  });
}

Tensor global_avg_pool(const Tensor& x) {
  require_rank(x, 4, "global_avg_pool");
  const auto B = x.dim(0), C = x.dim(1), plane = x.dim(2) * x.dim(3);
  const auto v = x.values();
  std::vector<double> out(B * C);
  for (std::size_t bc = 0; bc < B * C; ++bc) {
    double acc = 0.0;
    for (std::size_t j = 0; j < plane; ++j) acc += v[bc * plane + j];
    out[bc] = acc / static_cast<double>(plane);
  }
  return Tensor::make_result({B, C, 1, 1}, std::move(out), {x}, [plane](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    const double inv = 1.0 / static_cast<double>(plane);
    for (std::size_t bc = 0; bc < self.grad.size(); ++bc) {
      const double g = self.grad[bc] * inv;
      for (std::size_t j = 0; j < plane; ++j) gi[bc * plane + j] += g;
    }
  });
}

Tensor upsample_nearest2x(const Tensor& x) {
  require_rank(x, 4, "upsample_nearest2x");
  const auto BC = x.dim(0) * x.dim(1), H = x.dim(2), W = x.dim(3);
  const auto v = x.values();
  std::vector<double> out(BC * 4 * H * W);
  for (std::size_t bc = 0; bc < BC; ++bc) {
    for (std::size_t y = 0; y < 2 * H; ++y) {
      for (std::size_t xx = 0; xx < 2 * W; ++xx) {
        out[(bc * 2 * H + y) * 2 * W + xx] = v[(bc * H + y / 2) * W + xx / 2];
      }
    }
  }
  Shape shape = x.shape();
  shape[2] *= 2;
  shape[3] *= 2;
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [BC, H, W](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    for (std::size_t bc = 0; bc < BC; ++bc) {
      for (std::size_t y = 0; y < 2 * H; ++y) {
        for (std::size_t xx = 0; xx < 2 * W; ++xx) {
          gi[(bc * H + y / 2) * W + xx / 2] += self.grad[(bc * 2 * H + y) * 2 * W + xx];
        }
      }
    }
  });
}

namespace {

enum class Arith { add, sub, mul };

Tensor elementwise(const Tensor& a, const Tensor& b, Arith kind, const char* what) {
  const auto va = a.values();
  const auto vb = b.values();
  if (a.shape() == b.shape()) {
    std::vector<double> out(va.size());
    switch (kind) {
      case Arith::add:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] + vb[i];
        break;
      case Arith::sub:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] - vb[i];
        break;
      case Arith::mul:
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = va[i] * vb[i];
        break;
    }
    return Tensor::make_result(a.shape(), std::move(out), {a, b}, [kind](Node& self) {
      Node& na = *self.parents[0];
      Node& nb = *self.parents[1];
      const auto& g = self.grad;
      if (wants_grad(na)) {
        auto& ga = na.ensure_grad();
        if (kind == Arith::mul) {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * nb.values[i];
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
        }
      }
      if (wants_grad(nb)) {
        auto& gb = nb.ensure_grad();
        if (kind == Arith::mul) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * na.values[i];
        } else if (kind == Arith::sub) {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] -= g[i];
        } else {
          for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i];
        }
      }
    });
  }

  const auto plan = plan_broadcast(a.shape(), b.shape(), what);
  std::vector<double> out(shape_numel(plan.out));
  for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
    switch (kind) {
      case Arith::add: out[i] = va[ia] + vb[ib]; break;
      case Arith::sub: out[i] = va[ia] - vb[ib]; break;
      case Arith::mul: out[i] = va[ia] * vb[ib]; break;
    }
  });
  return Tensor::make_result(plan.out, std::move(out), {a, b}, [plan, kind](Node& self) {
    Node& na = *self.parents[0];
    Node& nb = *self.parents[1];
    const auto& g = self.grad;
    const bool need_a = wants_grad(na), need_b = wants_grad(nb);
    std::vector<double>* ga = need_a ? &na.ensure_grad() : nullptr;
    std::vector<double>* gb = need_b ? &nb.ensure_grad() : nullptr;
    for_each_broadcast(plan, [&](std::size_t i, std::size_t ia, std::size_t ib) {
      if (ga) (*ga)[ia] += kind == Arith::mul ? g[i] * nb.values[ib] : g[i];
      if (gb) {
        if (kind == Arith::mul) {
          (*gb)[ib] += g[i] * na.values[ia];
        } else if (kind == Arith::sub) {
          (*gb)[ib] -= g[i];
        } else {
          (*gb)[ib] += g[i];
        }
      }
    });
  });
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, Arith::add, "add"); }
Tensor sub(const Tensor& a, const Tensor& b) { return elementwise(a, b, Arith::sub, "sub"); }
Tensor mul(const Tensor& a, const Tensor& b) { return elementwise(a, b, Arith::mul, "mul"); }

Tensor scale(const Tensor& x, double factor) {
  const auto v = x.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] * factor;
  return Tensor::make_result(x.shape(), std::move(out), {x}, [factor](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i] * factor;
  });
}

Tensor concat_channels(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw ShapeError("concat_channels: no inputs");
  const auto& ref = parts.front().shape();
  if (ref.size() != 4) throw ShapeError("concat_channels: inputs must be rank 4");
  std::size_t channels = 0;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    const auto& s = p.shape();
    if (s.size() != 4 || s[0] != ref[0] || s[2] != ref[2] || s[3] != ref[3]) {
      throw ShapeError("concat_channels: " + shape_to_string(s) + " incompatible with " + shape_to_string(ref));
    }
    offsets.push_back(channels);
    channels += s[1];
  }
  const auto B = ref[0], plane = ref[2] * ref[3];
  std::vector<double> out(B * channels * plane);
  for (std::size_t k = 0; k < parts.size(); ++k) {
    const auto v = parts[k].values();
    const auto ck = parts[k].dim(1);
    for (std::size_t b = 0; b < B; ++b) {
      std::copy_n(v.data() + b * ck * plane, ck * plane, out.data() + (b * channels + offsets[k]) * plane);
    }
  }
  return Tensor::make_result({B, channels, ref[2], ref[3]}, std::move(out), parts,
                             [B, channels, plane, offsets](Node& self) {
                               for (std::size_t k = 0; k < self.parents.size(); ++k) {
                                 Node& p = *self.parents[k];
                                 if (!wants_grad(p)) continue;
                                 auto& gp = p.ensure_grad();
                                 const auto ck = p.shape[1];
                                 for (std::size_t b = 0; b < B; ++b) {
                                   const double* src = self.grad.data() + (b * channels + offsets[k]) * plane;
                                   double* dst = gp.data() + b * ck * plane;
                                   for (std::size_t j = 0; j < ck * plane; ++j) dst[j] += src[j];
                                 }
                               }
                             });
}

Tensor reshape(const Tensor& x, Shape shape) {
  if (shape_numel(shape) != x.numel()) {
    throw ShapeError("reshape: cannot view " + shape_to_string(x.shape()) + " as " + shape_to_string(shape));
  }
  std::vector<double> out(x.values().begin(), x.values().end());
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i];
  });
}

Tensor sum(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v;
  return Tensor::make_result({1}, {acc}, {x}, [](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    const double g = self.grad[0];
    for (auto& e : gi) e += g;
  });
}

Tensor sum_squares(const Tensor& x) {
  double acc = 0.0;
  for (double v : x.values()) acc += v * v;
  return Tensor::make_result({1}, {acc}, {x}, [](Node& self) {
    Node& in = *self.parents[0];
    auto& gi = in.ensure_grad();
    const double g = 2.0 * self.grad[0];
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += g * in.values[i];
  });
}

Tensor slice_batch(const Tensor& x, std::size_t index) {
  if (x.rank() < 1 || index >= x.dim(0)) throw ShapeError("slice_batch: index out of range");
  Shape shape = x.shape();
  const auto per = x.numel() / shape[0];
  shape[0] = 1;
  std::vector<double> out(x.values().begin() + static_cast<std::ptrdiff_t>(index * per),
                          x.values().begin() + static_cast<std::ptrdiff_t>((index + 1) * per));
  return Tensor::make_result(std::move(shape), std::move(out), {x}, [index, per](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    for (std::size_t j = 0; j < per; ++j) gi[index * per + j] += self.grad[j];
  });
}

Tensor binarize_ste(const Tensor& latent, double threshold) {
  const auto v = latent.values();
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] >= threshold ? 1.0 : 0.0;
  return Tensor::make_result(latent.shape(), std::move(out), {latent}, [](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += self.grad[i];
  });
}

namespace {

void check_shifts(std::span<const int> shifts, std::size_t channels) {
  if (shifts.size() != channels) {
    throw ShapeError("dispersion has " + std::to_string(shifts.size()) + " shifts for " + std::to_string(channels) +
                     " bands");
  }
  for (int d : shifts) {
    if (d < 0) throw UsageError("dispersion shifts must be nonnegative");
  }
}

std::size_t max_shift(std::span<const int> shifts) {
  return static_cast<std::size_t>(*std::max_element(shifts.begin(), shifts.end()));
}

// out[b, m, n + d_c] += cube[b, c, m, n]
void place_bands(const double* cube, double* meas, std::size_t B, std::size_t C, std::size_t H, std::size_t W,
                 std::size_t Wm, std::span<const int> shifts) {
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const auto d = static_cast<std::size_t>(shifts[c]);
      for (std::size_t m = 0; m < H; ++m) {
        const double* src = cube + ((b * C + c) * H + m) * W;
        double* dst = meas + (b * H + m) * Wm + d;
        for (std::size_t n = 0; n < W; ++n) dst[n] += src[n];
      }
    }
  }
}

// cube[b, c, m, n] += meas[b, m, n + d_c]
void gather_bands(const double* meas, double* cube, std::size_t B, std::size_t C, std::size_t H, std::size_t W,
                  std::size_t Wm, std::span<const int> shifts) {
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t c = 0; c < C; ++c) {
      const auto d = static_cast<std::size_t>(shifts[c]);
      for (std::size_t m = 0; m < H; ++m) {
        const double* src = meas + (b * H + m) * Wm + d;
        double* dst = cube + ((b * C + c) * H + m) * W;
        for (std::size_t n = 0; n < W; ++n) dst[n] += src[n];
      }
    }
  }
}

}  // namespace

Tensor shift_sum(const Tensor& cube, std::span<const int> shifts) {
  require_rank(cube, 4, "shift_sum");
  const auto B = cube.dim(0), C = cube.dim(1), H = cube.dim(2), W = cube.dim(3);
  check_shifts(shifts, C);
  const auto Wm = W + max_shift(shifts);
  std::vector<double> out(B * H * Wm, 0.0);
  place_bands(cube.values().data(), out.data(), B, C, H, W, Wm, shifts);
  std::vector<int> d(shifts.begin(), shifts.end());
  return Tensor::make_result({B, 1, H, Wm}, std::move(out), {cube}, [=](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    gather_bands(self.grad.data(), gi.data(), B, C, H, W, Wm, d);
  });
}

Tensor shift_split(const Tensor& meas, std::span<const int> shifts, std::size_t width) {
  require_rank(meas, 4, "shift_split");
  if (meas.dim(1) != 1) throw ShapeError("shift_split: measurement must have one channel");
  const auto B = meas.dim(0), H = meas.dim(2), Wm = meas.dim(3), C = shifts.size();
  if (C == 0) throw ShapeError("shift_split: no bands");
  check_shifts(shifts, C);
  if (width + max_shift(shifts) != Wm) {
    throw ShapeError("shift_split: measurement width " + std::to_string(Wm) + " != " + std::to_string(width) + "+" +
                     std::to_string(max_shift(shifts)));
  }
  std::vector<double> out(B * C * H * width, 0.0);
  gather_bands(meas.values().data(), out.data(), B, C, H, width, Wm, shifts);
  std::vector<int> d(shifts.begin(), shifts.end());
  return Tensor::make_result({B, C, H, width}, std::move(out), {meas}, [=](Node& self) {
    auto& gi = self.parents[0]->ensure_grad();
    place_bands(self.grad.data(), gi.data(), B, C, H, width, Wm, d);
  });
}

}  // namespace herosnet::ops
