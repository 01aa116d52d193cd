#pragma once

// Central-difference checks of every differentiable operation, shared by the
// unit tests and the acceptance binary.

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "herosnet/cassi.hpp"
#include "herosnet/ops.hpp"
#include "herosnet/recovery.hpp"
#include "support.hpp"

namespace testsupport {

struct OpCheck {
  std::string op;
  int trials = 0;
  double worst = 0.0;
  double analytic = 0.0, numeric = 0.0;  // at the worst entry
};

inline herosnet::Conv2d random_conv(int cin, int cout, int k, int stride, std::mt19937_64& rng) {
  herosnet::Conv2d c;
  c.weight = random_tensor({std::size_t(cout), std::size_t(cin), std::size_t(k), std::size_t(k)}, rng);
  c.bias = random_tensor({std::size_t(cout)}, rng);
  c.stride = stride;
  c.padding = (k - 1) / 2;
  return c;
}

inline std::vector<OpCheck> run_op_gradchecks(int trials, std::uint64_t seed) {
  using namespace herosnet;
  namespace o = herosnet::ops;
  using Inputs = std::vector<Tensor>;
  std::mt19937_64 rng(seed);
  std::vector<OpCheck> out;

  auto run = [&](const std::string& name, auto make_inputs, auto f) {
    OpCheck c;
    c.op = name;
    for (int t = 0; t < trials; ++t) {
      const auto r = fd_check(f, make_inputs(), rng);
      if (r.worst > c.worst) {
        c.worst = r.worst;
        c.analytic = r.worst_analytic;
        c.numeric = r.worst_numeric;
      }
      ++c.trials;
    }
    out.push_back(c);
  };
  auto shaped = [&](Shape s, double lo = -1.0, double hi = 1.0) { return random_tensor(s, rng, lo, hi); };
  // Central differences are only meaningful away from the ReLU kink, so
  // draws that put a pre-activation within 1e-3 of zero are redrawn.
  auto clear_of_kink = [](const Tensor& pre) {
    return std::all_of(pre.values().begin(), pre.values().end(), [](double v) { return std::abs(v) > 1e-3; });
  };
  auto conv_inputs = [&](Shape x_shape, int cin, int cout, int stride) {
    for (;;) {
      auto c = random_conv(cin, cout, 3, stride, rng);
      auto x = shaped(x_shape);
      NoGradGuard guard;
      if (clear_of_kink(c(x))) return Inputs{x, c.weight, c.bias};
    }
  };

  run("conv2d 3x3 stride 1", [&] { return Inputs{shaped({2, 2, 5, 5}), shaped({3, 2, 3, 3}), shaped({3})}; },
      [](const Inputs& in) { return o::conv2d(in[0], in[1], in[2], 1, 1); });
  run("conv2d 3x3 stride 2", [&] { return Inputs{shaped({1, 2, 6, 6}), shaped({2, 2, 3, 3}), shaped({2})}; },
      [](const Inputs& in) { return o::conv2d(in[0], in[1], in[2], 2, 1); });
  run("conv2d 1x1", [&] { return Inputs{shaped({1, 3, 4, 4}), shaped({2, 3, 1, 1}), shaped({2})}; },
      [](const Inputs& in) { return o::conv2d(in[0], in[1], in[2], 1, 0); });
  run("relu", [&] {
        for (;;) {
          auto x = shaped({2, 3, 4});
          if (clear_of_kink(x)) return Inputs{x};
        }
      },
      [](const Inputs& in) { return o::relu(in[0]); });
  run("sigmoid", [&] { return Inputs{shaped({2, 3, 4})}; }, [](const Inputs& in) { return o::sigmoid(in[0]); });
  // Shifted away from the pole at 0.
  run("reciprocal", [&] { return Inputs{shaped({2, 5}, 0.5, 1.5)}; },
      [](const Inputs& in) { return o::reciprocal(in[0]); });
  run("global_avg_pool", [&] { return Inputs{shaped({2, 3, 3, 4})}; },
      [](const Inputs& in) { return o::global_avg_pool(in[0]); });
  run("upsample_nearest2x", [&] { return Inputs{shaped({1, 2, 3, 3})}; },
      [](const Inputs& in) { return o::upsample_nearest2x(in[0]); });
  run("add", [&] { return Inputs{shaped({2, 3, 2, 2}), shaped({2, 3, 2, 2})}; },
      [](const Inputs& in) { return o::add(in[0], in[1]); });
  run("add broadcast", [&] { return Inputs{shaped({2, 3, 2, 2}), shaped({1, 3, 1, 1})}; },
      [](const Inputs& in) { return o::add(in[0], in[1]); });
  run("sub", [&] { return Inputs{shaped({2, 3, 2, 2}), shaped({2, 3, 2, 2})}; },
      [](const Inputs& in) { return o::sub(in[0], in[1]); });
  run("mul", [&] { return Inputs{shaped({2, 3, 2, 2}), shaped({2, 3, 2, 2})}; },
      [](const Inputs& in) { return o::mul(in[0], in[1]); });
  run("mul broadcast", [&] { return Inputs{shaped({1, 3, 1, 1}), shaped({2, 3, 2, 2})}; },
      [](const Inputs& in) { return o::mul(in[0], in[1]); });
  run("scale", [&] { return Inputs{shaped({3, 4})}; }, [](const Inputs& in) { return o::scale(in[0], -1.7); });
  run("concat_channels", [&] { return Inputs{shaped({2, 2, 2, 3}), shaped({2, 3, 2, 3})}; },
      [](const Inputs& in) { return o::concat_channels({in[0], in[1]}); });
  run("reshape", [&] { return Inputs{shaped({2, 6})}; }, [](const Inputs& in) { return o::reshape(in[0], {3, 4}); });
  run("sum", [&] { return Inputs{shaped({2, 3, 2})}; }, [](const Inputs& in) { return o::sum(in[0]); });
  run("sum_squares", [&] { return Inputs{shaped({2, 3, 2})}; },
      [](const Inputs& in) { return o::sum_squares(in[0]); });
  run("slice_batch", [&] { return Inputs{shaped({3, 2, 2, 2})}; },
      [](const Inputs& in) { return o::slice_batch(in[0], 1); });

  static const std::vector<int> shifts{0, 1, 2};
  run("shift_sum", [&] { return Inputs{shaped({2, 3, 3, 4})}; },
      [](const Inputs& in) { return o::shift_sum(in[0], shifts); });
  run("shift_split", [&] { return Inputs{shaped({2, 1, 3, 6})}; },
      [](const Inputs& in) { return o::shift_split(in[0], shifts, 4); });
  const auto rule = DispersionRule::unit(3);
  run("cassi forward", [&] { return Inputs{shaped({1, 3, 3, 4}), shaped({1, 1, 3, 4})}; },
      [rule](const Inputs& in) { return cassi::forward(in[0], in[1], rule); });
  run("cassi adjoint", [&] { return Inputs{shaped({1, 1, 3, 6}), shaped({1, 1, 3, 4})}; },
      [rule](const Inputs& in) { return cassi::adjoint(in[0], in[1], rule); });
  run("init_split", [&] { return Inputs{shaped({1, 1, 3, 6})}; },
      [rule](const Inputs& in) { return cassi::init_split(in[0], rule); });

  run("residual block", [&] {
        auto in = conv_inputs({1, 2, 4, 4}, 2, 2, 1);
        auto second = random_conv(2, 2, 3, 1, rng);
        in.push_back(second.weight);
        in.push_back(second.bias);
        return in;
      },
      [](const Inputs& in) {
        ResidualBlock b{{in[1], in[2], 1, 1}, {in[3], in[4], 1, 1}};
        return recovery::residual_block(in[0], b);
      });
  run("downsample block", [&] { return conv_inputs({1, 2, 4, 4}, 2, 2, 2); },
      [](const Inputs& in) { return o::relu(o::conv2d(in[0], in[1], in[2], 2, 1)); });
  run("upsample block", [&] {
        auto c = random_conv(2, 2, 3, 1, rng);
        return Inputs{shaped({1, 2, 2, 2}), c.weight, c.bias};
      },
      [](const Inputs& in) { return o::conv2d(o::upsample_nearest2x(in[0]), in[1], in[2], 1, 1); });
  run("conv-relu-gap composite", [&] { return conv_inputs({2, 2, 4, 4}, 2, 3, 1); },
      [](const Inputs& in) { return o::global_avg_pool(o::relu(o::conv2d(in[0], in[1], in[2], 1, 1))); });
  return out;
}

}  // namespace testsupport
