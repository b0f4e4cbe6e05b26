#include <cmath>

#include "doctest.h"
#include "s2d/nn.hpp"
#include "test_util.hpp"

using namespace s2d;
using namespace s2d::testutil;

TEST_CASE("rng determinism and state round-trip") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) {
    double u = a.uniform();
    CHECK(u == b.uniform());
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::string s = a.state();
  std::vector<double> seq;
  for (int i = 0; i < 10; ++i) seq.push_back(a.normal());
  Rng c(0);
  c.set_state(s);
  for (int i = 0; i < 10; ++i) CHECK(c.normal() == seq[i]);
  CHECK_THROWS(c.set_state("not a state"));
}

TEST_CASE("linear layer") {
  Rng rng(1);
  Linear lin(3, 2, rng);
  lin.weight.data() = {1, 0, 0, 0, 1, 0};
  lin.bias.data() = {10, 20};
  Tensor x = from_vector({1, 2, 3, 4, 5, 6}, {2, 3});
  Tensor y = lin(x);
  CHECK(y.shape() == Shape{2, 2});
  CHECK(y.data() == std::vector<double>{11, 22, 14, 25});
  // rank-1 input treated as one row
  Tensor y1 = lin(from_vector({1, 2, 3}, {3}));
  CHECK(y1.shape() == Shape{2});
  CHECK(y1.data() == std::vector<double>{11, 22});
}

TEST_CASE("conv2d matches a naive loop") {
  Rng rng(3);
  const std::size_t in = 2, out = 3, k = 3, stride = 2, pad = 1, h = 5, w = 7;
  Conv2d conv(in, out, k, stride, pad, rng);
  Tensor x = randn(rng, {in, h, w}, 1.0, false);
  Tensor y = conv(x);
  std::size_t oh = (h + 2 * pad - k) / stride + 1;
  std::size_t ow = (w + 2 * pad - k) / stride + 1;
  REQUIRE(y.shape() == Shape{out, oh, ow});

  for (std::size_t o = 0; o < out; ++o)
    for (std::size_t oy = 0; oy < oh; ++oy)
      for (std::size_t ox = 0; ox < ow; ++ox) {
        double acc = conv.bias.data()[o];
        for (std::size_t ci = 0; ci < in; ++ci)
          for (std::size_t ky = 0; ky < k; ++ky)
            for (std::size_t kx = 0; kx < k; ++kx) {
              std::ptrdiff_t iy = std::ptrdiff_t(oy * stride + ky) - 1;
              std::ptrdiff_t ix = std::ptrdiff_t(ox * stride + kx) - 1;
              if (iy < 0 || iy >= std::ptrdiff_t(h) || ix < 0 ||
                  ix >= std::ptrdiff_t(w))
                continue;
              acc += conv.weight.data()[o * in * k * k + (ci * k + ky) * k + kx] *
                     x.data()[(ci * h + std::size_t(iy)) * w + std::size_t(ix)];
            }
        CHECK(y.data()[(o * oh + oy) * ow + ox] == doctest::Approx(acc));
      }
}

TEST_CASE("conv2d gradients vs finite differences") {
  Rng rng(5);
  Conv2d conv(1, 2, 3, 1, 1, rng);
  std::vector<double> x0 = randn(rng, {1, 4, 4}, 1.0, false).data();
  Tensor x = leaf(x0, {1, 4, 4}, true);
  Tensor y = sum(square(conv(x)));
  auto g = grad(y, {x, conv.weight, conv.bias});

  auto fd_x = finite_diff(
      [&](const std::vector<double>& v) {
        return sum(square(conv(from_vector(v, {1, 4, 4})))).item();
      },
      x0);
  CHECK(max_rel_err(g[0].data(), fd_x) < 1e-6);

  std::vector<double> w0 = conv.weight.data();
  auto fd_w = finite_diff(
      [&](const std::vector<double>& v) {
        Conv2d c2 = conv;
        c2.weight = from_vector(v, conv.weight.shape());
        return sum(square(c2(from_vector(x0, {1, 4, 4})))).item();
      },
      w0);
  CHECK(max_rel_err(g[1].data(), fd_w) < 1e-6);
}

TEST_CASE("bilinear upsample") {
  // linear ramp f(x,y) = x + 2y interpolates exactly away from borders
  Tensor x = from_vector({0, 1, 2, 3}, {1, 2, 2});
  Tensor y = upsample2x(x);
  REQUIRE(y.shape() == Shape{1, 4, 4});
  CHECK(y.data()[0] == doctest::Approx(0.0));    // clamped corner
  CHECK(y.data()[5] == doctest::Approx(0.75));   // (0.25, 0.25)
  CHECK(y.data()[10] == doctest::Approx(2.25));  // (0.75, 0.75)
  CHECK(y.data()[15] == doctest::Approx(3.0));

  Tensor c = full({2, 3, 5}, 0.7);
  Tensor cu = upsample2x(c);
  for (double v : cu.data()) CHECK(v == doctest::Approx(0.7));
}

TEST_CASE("avgpool and crop") {
  Tensor x = from_vector({1, 2, 3, 4}, {1, 2, 2});
  CHECK(avgpool2(x).data() == std::vector<double>{2.5});
  Tensor big = from_vector({0, 1, 2, 3, 4, 5, 6, 7, 8}, {1, 3, 3});
  Tensor cr = crop(big, 1, 0, 2, 2);
  CHECK(cr.data() == std::vector<double>{3, 4, 6, 7});
  CHECK_THROWS(crop(big, 2, 2, 2, 2));
}

TEST_CASE("modulated convolution demodulates") {
  Rng rng(9);
  ModulatedConv2d mc(2, 3, 3, 8, rng);
  std::fill(mc.conv.bias.data().begin(), mc.conv.bias.data().end(), 0.0);
  Tensor x = randn(rng, {2, 4, 4}, 1.0, false);
  Tensor w = randn(rng, {8}, 1.0, false);
  Tensor y1 = mc(x, w);
  // output invariant to uniform scaling of the base kernel (demodulation)
  for (auto& v : mc.conv.weight.data()) v *= 3.0;
  Tensor y2 = mc(x, w);
  CHECK(max_rel_err(y1.data(), y2.data()) < 1e-6);
  // bias is added after demodulation
  std::fill(mc.conv.bias.data().begin(), mc.conv.bias.data().end(), 2.0);
  Tensor y3 = mc(x, w);
  for (std::size_t i = 0; i < y3.size(); ++i)
    CHECK(y3.data()[i] == doctest::Approx(y2.data()[i] + 2.0));
}

TEST_CASE("adam first step") {
  Tensor p = leaf({0.0}, {1}, true);
  Adam opt({p}, 2e-3);
  opt.step({from_vector({1.0}, {1})});
  // beta1 = 0, bias-corrected: update = -lr * g / (|g| + eps)
  CHECK(p.data()[0] == doctest::Approx(-2e-3).epsilon(1e-6));
  CHECK(opt.step_count == 1);
  CHECK_THROWS(opt.step({}));
}
