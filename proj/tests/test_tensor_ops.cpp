#include <doctest.h>

#include "herosnet/error.hpp"
#include "herosnet/ops.hpp"
#include "herosnet/recovery.hpp"
#include "op_gradchecks.hpp"
#include "support.hpp"

using namespace herosnet;
using testsupport::random_tensor;

TEST_CASE("tensor factories reject zero extents and mismatched value counts") {
  CHECK_THROWS_AS(Tensor::zeros({2, 0}), ShapeError);
  CHECK_THROWS_AS(Tensor::from({2, 2}, {1.0, 2.0, 3.0}), ShapeError);
  const auto t = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6});
  CHECK(t.numel() == 6);
  CHECK(t.dim(1) == 3);
}

TEST_CASE("conv2d on zero input with zero bias is zero") {
  std::mt19937_64 rng(1);
  const auto x = Tensor::zeros({1, 1, 3, 3});
  const auto w = random_tensor({2, 1, 3, 3}, rng);
  const auto y = ops::conv2d(x, w, Tensor::zeros({2}), 1, 1);
  for (double v : y.values()) CHECK(v == 0.0);
}

TEST_CASE("conv2d with a 1x1 unit kernel is the identity") {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({1, 1, 3, 3}, rng);
  const auto y = ops::conv2d(x, Tensor::from({1, 1, 1, 1}, {1.0}), Tensor::zeros({1}), 1, 0);
  CHECK(testsupport::max_abs_diff(x.values(), y.values()) == 0.0);
}

TEST_CASE("conv2d of [[1,2],[3,4]] with an all-ones 3x3 kernel matches the loop oracle") {
  const auto x = Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4});
  const auto w = Tensor::full({1, 1, 3, 3}, 1.0);
  const auto b = Tensor::zeros({1});
  const auto y = ops::conv2d(x, w, b, 1, 1);
  const auto oracle = testsupport::naive_conv2d(x, w, b, 1, 1);
  // Every window of a 2x2 image with padding 1 covers all four pixels.
  CHECK(oracle == std::vector<double>{10, 10, 10, 10});
  CHECK(std::vector<double>(y.values().begin(), y.values().end()) == oracle);
}

TEST_CASE("conv2d agrees with the loop oracle on random shapes and strides") {
  std::mt19937_64 rng(3);
  struct Case {
    std::size_t B, Cin, H, W, Cout, k;
    int stride;
  };
  for (const auto& c : {Case{1, 1, 5, 5, 1, 3, 1}, Case{2, 3, 6, 4, 2, 3, 1}, Case{1, 2, 8, 8, 3, 3, 2},
                        Case{2, 2, 7, 5, 4, 5, 1}, Case{1, 4, 4, 4, 2, 1, 1}}) {
    const auto x = random_tensor({c.B, c.Cin, c.H, c.W}, rng);
    const auto w = random_tensor({c.Cout, c.Cin, c.k, c.k}, rng);
    const auto b = random_tensor({c.Cout}, rng);
    const int pad = int(c.k - 1) / 2;
    const auto y = ops::conv2d(x, w, b, c.stride, pad);
    const auto oracle = testsupport::naive_conv2d(x, w, b, c.stride, pad);
    REQUIRE(y.numel() == oracle.size());
    CHECK(testsupport::max_abs_diff(y.values(), oracle) < 1e-12);
  }
}

TEST_CASE("conv2d rejects a channel mismatch and even kernels") {
  const auto x = Tensor::zeros({1, 2, 4, 4});
  CHECK_THROWS_AS(ops::conv2d(x, Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1}), 1, 1), ShapeError);
  CHECK_THROWS_AS(ops::conv2d(x, Tensor::zeros({1, 2, 2, 2}), Tensor::zeros({1}), 1, 0), ShapeError);
}

TEST_CASE("relu values and subgradient") {
  const auto y = ops::relu(Tensor::from({3}, {-1, 0, 2}));
  CHECK(std::vector<double>(y.values().begin(), y.values().end()) == std::vector<double>{0, 0, 2});
  const auto neg = ops::relu(Tensor::full({4}, -0.5));
  for (double v : neg.values()) CHECK(v == 0.0);

  auto x = Tensor::from({2}, {-1, 2}, true);
  backward(ops::sum(ops::relu(x)));
  CHECK(x.grad()[0] == 0.0);
  CHECK(x.grad()[1] == 1.0);
  auto z = Tensor::from({1}, {0.0}, true);
  backward(ops::sum(ops::relu(z)));
  CHECK(z.grad()[0] == 0.0);
}

TEST_CASE("sigmoid symmetry and slope at zero") {
  CHECK(ops::sigmoid(Tensor::scalar(0.0)).item() == 0.5);
  std::mt19937_64 rng(4);
  const auto x = random_tensor({16}, rng, -5, 5, false);
  const auto a = ops::sigmoid(x);
  const auto b = ops::sigmoid(ops::scale(x, -1.0));
  for (std::size_t i = 0; i < 16; ++i) CHECK(a.values()[i] == doctest::Approx(1.0 - b.values()[i]).epsilon(1e-15));
  auto z = Tensor::scalar(0.0, true);
  backward(ops::sigmoid(z));
  CHECK(z.grad()[0] == doctest::Approx(0.25).epsilon(1e-15));
  // Large arguments stay finite.
  const auto big = ops::sigmoid(Tensor::from({2}, {-800.0, 800.0}));
  CHECK(big.values()[0] == 0.0);
  CHECK(big.values()[1] == 1.0);
}

TEST_CASE("global average pooling") {
  const auto c = ops::global_avg_pool(Tensor::full({1, 2, 3, 3}, 0.7));
  CHECK(c.shape() == Shape{1, 2, 1, 1});
  CHECK(c.values()[0] == doctest::Approx(0.7));
  CHECK(ops::global_avg_pool(Tensor::from({1, 1, 2, 2}, {1, 3, 5, 7})).item() == 4.0);
  auto x = Tensor::zeros({1, 1, 2, 3}, true);
  backward(ops::sum(ops::global_avg_pool(x)));
  for (double g : x.grad()) CHECK(g == doctest::Approx(1.0 / 6.0));
}

TEST_CASE("nearest upsampling of [[1,2],[3,4]]") {
  const auto y = ops::upsample_nearest2x(Tensor::from({1, 1, 2, 2}, {1, 2, 3, 4}));
  CHECK(y.shape() == Shape{1, 1, 4, 4});
  const std::vector<double> expected{1, 1, 2, 2, 1, 1, 2, 2, 3, 3, 4, 4, 3, 3, 4, 4};
  CHECK(std::vector<double>(y.values().begin(), y.values().end()) == expected);
}

TEST_CASE("down and up blocks round-trip the spatial shape") {
  std::mt19937_64 rng(5);
  const auto x = random_tensor({1, 3, 8, 8}, rng, -1, 1, false);
  const auto down = testsupport::random_conv(3, 3, 3, 2, rng);
  const auto up = testsupport::random_conv(3, 3, 3, 1, rng);
  const auto mid = ops::relu(down(x));
  CHECK(mid.shape() == Shape{1, 3, 4, 4});
  CHECK(up(ops::upsample_nearest2x(mid)).shape() == Shape{1, 3, 8, 8});

  EnhancementParams e;
  e.down.push_back(down);
  e.up.push_back(up);
  CHECK_THROWS_AS(recovery::enhancement(random_tensor({1, 3, 5, 6}, rng), e), ShapeError);
}

TEST_CASE("concat and broadcasting") {
  std::mt19937_64 rng(6);
  const auto a = random_tensor({2, 2, 3, 3}, rng);
  const auto b = random_tensor({2, 3, 3, 3}, rng);
  CHECK(ops::concat_channels({a, b}).shape() == Shape{2, 5, 3, 3});
  CHECK_THROWS_AS(ops::concat_channels({a, random_tensor({2, 3, 4, 3}, rng)}), ShapeError);

  const auto ones = Tensor::full(a.shape(), 1.0);
  CHECK(testsupport::max_abs_diff(ops::mul(a, ones).values(), a.values()) == 0.0);
  CHECK_THROWS_AS(ops::add(a, random_tensor({2, 3, 3, 3}, rng)), ShapeError);

  // Gradient on a [1,C,1,1] factor is the per-channel sum of upstream * x.
  auto s = random_tensor({1, 2, 1, 1}, rng);
  const auto x = random_tensor({2, 2, 3, 3}, rng, -1, 1, false);
  const auto up = random_tensor({2, 2, 3, 3}, rng, -1, 1, false);
  backward(ops::sum(ops::mul(ops::mul(s, x), up)));
  for (std::size_t c = 0; c < 2; ++c) {
    double expected = 0.0;
    for (std::size_t n = 0; n < 2; ++n)
      for (std::size_t i = 0; i < 9; ++i) expected += up.values()[(n * 2 + c) * 9 + i] * x.values()[(n * 2 + c) * 9 + i];
    CHECK(s.grad()[c] == doctest::Approx(expected).epsilon(1e-13));
  }
}

TEST_CASE("backward on linear and quadratic losses") {
  std::mt19937_64 rng(7);
  auto x = random_tensor({3, 4}, rng);
  backward(ops::sum(x));
  for (double g : x.grad()) CHECK(g == 1.0);

  backward(ops::scale(ops::sum(ops::mul(x, x)), 0.5));
  CHECK(testsupport::max_abs_diff(x.grad(), x.values()) < 1e-15);

  CHECK_THROWS_AS(backward(ops::mul(x, x)), UsageError);
}

TEST_CASE("a second backward re-zeroes instead of accumulating") {
  std::mt19937_64 rng(8);
  auto x = random_tensor({5}, rng);
  const auto loss = ops::sum_squares(x);
  backward(loss);
  const std::vector<double> first(x.grad().begin(), x.grad().end());
  backward(loss);
  CHECK(std::vector<double>(x.grad().begin(), x.grad().end()) == first);
}

TEST_CASE("backward is linear in the loss") {
  std::mt19937_64 rng(9);
  auto x = random_tensor({2, 2, 4, 4}, rng);
  const auto w = random_tensor({2, 2, 3, 3}, rng, -1, 1, false);
  auto f = [&] { return ops::sum_squares(ops::conv2d(x, w, Tensor(), 1, 1)); };
  auto g = [&] { return ops::sum(ops::sigmoid(x)); };
  const double a = 1.5, b = -0.25;
  backward(f());
  const std::vector<double> gf(x.grad().begin(), x.grad().end());
  backward(g());
  const std::vector<double> gg(x.grad().begin(), x.grad().end());
  backward(ops::add(ops::scale(f(), a), ops::scale(g(), b)));
  for (std::size_t i = 0; i < gf.size(); ++i) CHECK(x.grad()[i] == doctest::Approx(a * gf[i] + b * gg[i]).epsilon(1e-12));
}

TEST_CASE("forward and backward are bit-identical across runs") {
  auto run = [] {
    std::mt19937_64 rng(10);
    auto x = random_tensor({1, 2, 6, 6}, rng);
    auto w = random_tensor({3, 2, 3, 3}, rng);
    auto b = random_tensor({3}, rng);
    const auto loss = ops::sum_squares(ops::relu(ops::conv2d(x, w, b, 1, 1)));
    backward(loss);
    std::vector<double> out{loss.item()};
    out.insert(out.end(), w.grad().begin(), w.grad().end());
    out.insert(out.end(), x.grad().begin(), x.grad().end());
    return out;
  };
  CHECK(run() == run());
}

TEST_CASE("zero input through a bias-free conv gives zero output and zero weight gradient") {
  std::mt19937_64 rng(11);
  auto w = random_tensor({2, 2, 3, 3}, rng);
  const auto y = ops::conv2d(Tensor::zeros({1, 2, 4, 4}), w, Tensor(), 1, 1);
  for (double v : y.values()) CHECK(v == 0.0);
  const auto up = random_tensor(y.shape(), rng, -1, 1, false);
  backward(ops::sum(ops::mul(y, up)));
  for (double g : w.grad()) CHECK(g == 0.0);
}

TEST_CASE("every differentiable op matches central differences") {
  for (const auto& c : testsupport::run_op_gradchecks(20, 12)) {
    INFO(c.op << " analytic=" << c.analytic << " numeric=" << c.numeric);
    CHECK(c.trials >= 20);
    CHECK(c.worst <= 1e-4);
  }
}

TEST_CASE("all values stay finite through forward and backward") {
  std::mt19937_64 rng(13);
  auto x = random_tensor({1, 2, 4, 4}, rng, -50, 50);
  const auto loss = ops::sum(ops::sigmoid(ops::mul(x, x)));
  backward(loss);
  CHECK(std::isfinite(loss.item()));
  for (double g : x.grad()) CHECK(std::isfinite(g));
}
