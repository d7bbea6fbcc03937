#include "mlrn/grad_check.hpp"
#include "mlrn/ops.hpp"
#include "mlrn/serialize.hpp"

#include "test_util.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cstring>
#include <filesystem>

using namespace mlrn;
using mlrn::testing::away_from_zero;
using mlrn::testing::conv2d_oracle;
using mlrn::testing::random_conv;
using mlrn::testing::random_tensor;
using mlrn::testing::weighted_sum;

namespace {

Values vals(std::initializer_list<double> v) {
  Values out(static_cast<Index>(v.size()));
  std::copy(v.begin(), v.end(), out.begin());
  return out;
}

double max_of(const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); }

bool bitwise_equal(const Values& a, const Values& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), sizeof(double) * a.size()) == 0;
}

}  // namespace

TEST(Conv2d, IdentityKernel) {
  std::mt19937_64 rng(1);
  ConvParams p = ConvParams::same(1, 1, 1, 1);
  p.weight.mutable_values()[0] = 1.0;
  Tensor x = random_tensor({2, 1, 5, 7}, rng);
  EXPECT_TRUE(bitwise_equal(conv2d(x, p).values(), x.values()));
}

TEST(Conv2d, ZeroPaddingOverlapCounts) {
  ConvParams p = ConvParams::same(1, 1, 3, 3);
  p.weight.mutable_values().setOnes();
  Tensor y = conv2d(Tensor::filled({1, 1, 3, 3}, 1.0), p);
  EXPECT_EQ(y.at(0, 0, 1, 1), 9.0);
  for (auto [r, c] : {std::pair{0, 1}, {1, 0}, {1, 2}, {2, 1}}) EXPECT_EQ(y.at(0, 0, r, c), 6.0);
  for (auto [r, c] : {std::pair{0, 0}, {0, 2}, {2, 0}, {2, 2}}) EXPECT_EQ(y.at(0, 0, r, c), 4.0);
}

TEST(Conv2d, MatchesLoopOracleBitwise) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> dim(1, 8), ch(1, 4), small(1, 2), kernel(0, 2);
    const Index k = 2 * kernel(rng) + 1;
    Tensor x = random_tensor({small(rng), ch(rng), dim(rng), dim(rng)}, rng);
    ConvParams p = random_conv(x.shape().c, ch(rng), k, rng);
    const Values expected = conv2d_oracle(x, p.weight, p.bias, p.padding.h, p.padding.w);
    EXPECT_TRUE(bitwise_equal(conv2d(x, p).values(), expected)) << "seed " << seed;
  }
}

TEST(Conv2d, GradientsMatchFiniteDifferences) {
  std::mt19937_64 rng(7);
  Tensor x = random_tensor({1, 2, 4, 4}, rng);
  ConvParams p = random_conv(2, 3, 3, rng);
  Tensor mix = random_tensor({1, 3, 4, 4}, rng);
  auto builder = [&](const std::vector<Tensor>& l) {
    return weighted_sum(conv2d(l[0], ConvParams{l[1], l[2], p.padding}), mix);
  };
  const auto err = grad_check(builder, {x, p.weight, p.bias}, 1e-6);
  for (double e : err) EXPECT_LT(e, 1e-6);
}

TEST(Conv2d, RejectsChannelMismatchAndEvenKernels) {
  ConvParams p = ConvParams::same(3, 4, 3, 3);
  EXPECT_THROW(conv2d(Tensor::zeros({1, 2, 4, 4}), p), ShapeError);
  EXPECT_THROW(ConvParams::same(3, 4, 2, 2), ShapeError);
}

TEST(Relu, SignBoundaries) {
  Tensor x = Tensor::from_values({1, 1, 1, 3}, vals({-1.0, 0.0, 2.0}), true);
  Tensor y = relu(x);
  EXPECT_EQ(y.values()[0], 0.0);
  EXPECT_EQ(y.values()[1], 0.0);
  EXPECT_EQ(y.values()[2], 2.0);
  backward(sum(y));
  EXPECT_EQ(x.grad()[0], 0.0);
  EXPECT_EQ(x.grad()[1], 0.0);  // subgradient at the kink
  EXPECT_EQ(x.grad()[2], 1.0);
}

TEST(Relu, FiniteDifferencesAwayFromKink) {
  std::mt19937_64 rng(3);
  Tensor x = away_from_zero({1, 2, 3, 3}, rng, 1e-3);
  Tensor mix = random_tensor({1, 2, 3, 3}, rng);
  auto builder = [&](const std::vector<Tensor>& l) { return weighted_sum(relu(l[0]), mix); };
  EXPECT_LT(max_of(grad_check(builder, {x}, 1e-6)), 1e-8);
}

TEST(Concat, ChannelBlocksInArgumentOrder) {
  std::mt19937_64 rng(4);
  Tensor a = random_tensor({1, 2, 3, 4}, rng);
  Tensor b = random_tensor({1, 3, 3, 4}, rng);
  const std::array<Tensor, 2> parts{a, b};
  Tensor y = concat_channels(parts);
  ASSERT_EQ(y.shape(), (Shape{1, 5, 3, 4}));
  for (Index r = 0; r < 3; ++r)
    for (Index c = 0; c < 4; ++c) {
      for (Index k = 0; k < 2; ++k) EXPECT_EQ(y.at(0, k, r, c), a.at(0, k, r, c));
      for (Index k = 0; k < 3; ++k) EXPECT_EQ(y.at(0, 2 + k, r, c), b.at(0, k, r, c));
    }
  const std::array<Tensor, 1> single{a};
  EXPECT_TRUE(bitwise_equal(concat_channels(single).values(), a.values()));
}

TEST(Concat, FusedOneByOneEqualsBlockSum) {
  std::mt19937_64 rng(5);
  Tensor a = random_tensor({2, 2, 3, 3}, rng);
  Tensor b = random_tensor({2, 3, 3, 3}, rng);
  ConvParams fuse = random_conv(5, 2, 1, rng);

  // Block-matrix oracle: W_A * A + W_B * B + bias, computed per pixel.
  const std::array<Tensor, 2> parts{a, b};
  Tensor y = conv2d(concat_channels(parts), fuse);
  for (Index n = 0; n < 2; ++n)
    for (Index o = 0; o < 2; ++o)
      for (Index r = 0; r < 3; ++r)
        for (Index c = 0; c < 3; ++c) {
          double expected = fuse.bias.values()[o];
          for (Index i = 0; i < 2; ++i) expected += fuse.weight.at(o, i, 0, 0) * a.at(n, i, r, c);
          for (Index i = 0; i < 3; ++i) expected += fuse.weight.at(o, 2 + i, 0, 0) * b.at(n, i, r, c);
          EXPECT_NEAR(y.at(n, o, r, c), expected, 1e-12);
        }

  Tensor mix = random_tensor(y.shape(), rng);
  auto builder = [&](const std::vector<Tensor>& l) {
    const std::array<Tensor, 2> p{l[0], l[1]};
    return weighted_sum(conv2d(concat_channels(p), fuse), mix);
  };
  for (double e : grad_check(builder, {a, b}, 1e-6)) EXPECT_LT(e, 1e-6);
  const std::array<Tensor, 2> bad{a, Tensor::zeros({2, 1, 4, 3})};
  EXPECT_THROW(concat_channels(bad), ShapeError);
}

TEST(Add, IdentityLinearityAndResidualChain) {
  std::mt19937_64 rng(6);
  Tensor a = random_tensor({1, 2, 3, 3}, rng, true);
  EXPECT_TRUE(bitwise_equal(add(a, Tensor::zeros(a.shape())).values(), a.values()));

  Tensor b = random_tensor({1, 2, 3, 3}, rng, true);
  Tensor up = random_tensor({1, 2, 3, 3}, rng);
  backward(weighted_sum(add(a, b), up));
  EXPECT_TRUE((a.grad() == up.values()).all());
  EXPECT_TRUE((b.grad() == up.values()).all());
  EXPECT_THROW(add(a, Tensor::zeros({1, 3, 3, 3})), ShapeError);

  ConvParams f = random_conv(2, 2, 3, rng);
  ConvParams g = random_conv(2, 2, 3, rng);
  auto builder = [&](const std::vector<Tensor>& l) {
    Tensor x = l[0];
    Tensor inner = add(x, conv2d(x, f));
    return weighted_sum(add(inner, conv2d(inner, g)), up);
  };
  EXPECT_LT(max_of(grad_check(builder, {a}, 1e-6)), 1e-6);
}

TEST(PixelShuffle, IdentityAndChannelOrder) {
  std::mt19937_64 rng(8);
  Tensor x = random_tensor({2, 3, 4, 5}, rng);
  EXPECT_TRUE(bitwise_equal(pixel_shuffle(x, 1).values(), x.values()));

  Tensor abcd = Tensor::from_values({1, 4, 1, 1}, vals({1.0, 2.0, 3.0, 4.0}));
  Tensor y = pixel_shuffle(abcd, 2);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  EXPECT_EQ(y.at(0, 0, 0, 0), 1.0);
  EXPECT_EQ(y.at(0, 0, 0, 1), 2.0);
  EXPECT_EQ(y.at(0, 0, 1, 0), 3.0);
  EXPECT_EQ(y.at(0, 0, 1, 1), 4.0);
  EXPECT_THROW(pixel_shuffle(Tensor::zeros({1, 6, 2, 2}), 2), ShapeError);
}

TEST(PixelShuffle, PermutationProperties) {
  for (Index r : {2, 3, 4}) {
    std::mt19937_64 rng(static_cast<std::uint64_t>(r));
    Tensor x = random_tensor({2, 2 * r * r, 3, 4}, rng);
    Tensor y = pixel_shuffle(x, r);
    ASSERT_EQ(y.shape(), (Shape{2, 2, 3 * r, 4 * r}));
    Values sx = x.values(), sy = y.values();
    std::sort(sx.begin(), sx.end());
    std::sort(sy.begin(), sy.end());
    EXPECT_TRUE(bitwise_equal(sx, sy));
    EXPECT_TRUE(bitwise_equal(pixel_unshuffle(y, r).values(), x.values()));

    Tensor mix = random_tensor(y.shape(), rng);
    auto builder = [&](const std::vector<Tensor>& l) { return weighted_sum(pixel_shuffle(l[0], r), mix); };
    // Linear graph: a wide step has no truncation error and less cancellation.
    EXPECT_LT(max_of(grad_check(builder, {x}, 1e-3)), 1e-8);
  }
}

TEST(L1Loss, ValuesAndGradient) {
  Tensor p = Tensor::from_values({1, 1, 1, 2}, vals({1.0, 2.0}), true);
  Tensor t = Tensor::from_values({1, 1, 1, 2}, vals({0.0, 4.0}));
  Tensor loss = l1_loss(p, t);
  EXPECT_DOUBLE_EQ(loss.item(), 1.5);
  backward(loss);
  EXPECT_DOUBLE_EQ(p.grad()[0], 0.5);
  EXPECT_DOUBLE_EQ(p.grad()[1], -0.5);
  EXPECT_EQ(l1_loss(t, t).item(), 0.0);
  EXPECT_THROW(l1_loss(p, Tensor::zeros({1, 1, 1, 3})), ShapeError);
}

TEST(Backward, SumFanOutAndAccumulation) {
  std::mt19937_64 rng(9);
  Tensor x = random_tensor({1, 2, 2, 2}, rng, true);
  backward(sum(x));
  EXPECT_TRUE((x.grad() == 1.0).all());

  Tensor y = random_tensor({1, 2, 2, 2}, rng, true);
  backward(sum(add(y, y)));
  EXPECT_TRUE((y.grad() == 2.0).all());
  backward(sum(add(y, y)));
  EXPECT_TRUE((y.grad() == 4.0).all());  // accumulates until reset
  y.zero_grad();
  EXPECT_TRUE((y.grad() == 0.0).all());

  EXPECT_THROW(backward(x), ShapeError);
}

TEST(GradCheck, AffineIsExact) {
  std::mt19937_64 rng(10);
  Tensor x = random_tensor({1, 1, 3, 3}, rng);
  auto builder = [](const std::vector<Tensor>& l) { return sum(scale(l[0], 3.0)); };
  EXPECT_LT(max_of(grad_check(builder, {x}, 1e-3)), 1e-10);
}

TEST(GradCheck, ConvReluL1Composite) {
  std::mt19937_64 rng(11);
  Tensor x = random_tensor({1, 2, 5, 5}, rng);
  ConvParams p = random_conv(2, 3, 3, rng);
  Tensor pre = conv2d(x, p);
  ASSERT_GT(pre.values().abs().minCoeff(), 1e-4);
  // Target far below the ReLU output so |pred - target| never crosses zero.
  Tensor target = Tensor::filled(pre.shape(), -10.0);
  auto builder = [&](const std::vector<Tensor>& l) {
    return l1_loss(relu(conv2d(l[0], ConvParams{l[1], l[2], p.padding})), target);
  };
  EXPECT_LT(max_of(grad_check(builder, {x, p.weight, p.bias}, 1e-5)), 1e-5);
}

TEST(GradCheck, DetectsCorruptedConvBackward) {
  std::mt19937_64 rng(12);
  Tensor x = random_tensor({1, 2, 5, 5}, rng);
  ConvParams p = random_conv(2, 2, 3, rng);
  Tensor mix = random_tensor({1, 2, 5, 5}, rng);

  // Correct forward values, but the input gradient correlates with the kernel
  // unflipped, the classic transposed-convolution bug.
  auto faulty_conv = [&](const Tensor& in) {
    Tensor good = conv2d(in, p);
    const Shape s = in.shape();
    const Tensor w = p.weight;
    return make_result(OpKind::Custom, {in}, good.shape(), good.values(),
                       [s, w](const Values& g, std::span<Values* const> grads) {
                         const Shape ws = w.shape();
                         for (Index i = 0; i < s.c; ++i)
                           for (Index y = 0; y < s.h; ++y)
                             for (Index xx = 0; xx < s.w; ++xx)
                               for (Index o = 0; o < ws.n; ++o)
                                 for (Index dy = 0; dy < ws.h; ++dy)
                                   for (Index dx = 0; dx < ws.w; ++dx) {
                                     const Index oy = y + dy - 1;
                                     const Index ox = xx + dx - 1;
                                     if (oy < 0 || oy >= s.h || ox < 0 || ox >= s.w) continue;
                                     (*grads[0])[(i * s.h + y) * s.w + xx] +=
                                         g[(o * s.h + oy) * s.w + ox] * w.at(o, i, dy, dx);
                                   }
                       });
  };
  auto healthy = [&](const std::vector<Tensor>& l) { return weighted_sum(conv2d(l[0], p), mix); };
  auto broken = [&](const std::vector<Tensor>& l) { return weighted_sum(faulty_conv(l[0]), mix); };
  EXPECT_LT(max_of(grad_check(healthy, {x}, 1e-6)), 1e-6);
  EXPECT_GT(max_of(grad_check(broken, {x}, 1e-6)), 1e-2);
}

TEST(Serialize, RoundTripAndRejectsCorruption) {
  std::mt19937_64 rng(13);
  std::vector<NamedTensor> tensors{{"a.weight", random_tensor({2, 3, 3, 3}, rng)},
                                   {"b", random_tensor({1, 4, 1, 1}, rng)}};
  const std::string bytes = encode_tensors(tensors);
  EXPECT_EQ(bytes.substr(0, 4), "MLRN");
  EXPECT_EQ(bytes[4], '\x01');
  // name length (8) + name + 4 extents + 54 values for the first entry
  EXPECT_EQ(bytes.size(), 5u + (8 + 8 + 32 + 54 * 8) + (8 + 1 + 32 + 4 * 8));

  auto back = decode_tensors(bytes);
  ASSERT_EQ(back.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_EQ(back[i].first, tensors[i].first);
    EXPECT_EQ(back[i].second.shape(), tensors[i].second.shape());
    EXPECT_TRUE(bitwise_equal(back[i].second.values(), tensors[i].second.values()));
  }
  EXPECT_THROW(decode_tensors("XLRN\x01"), FormatError);
  EXPECT_THROW(decode_tensors(bytes.substr(0, bytes.size() - 3)), FormatError);

  const auto path = std::filesystem::temp_directory_path() / "mlrn_serialize_test.bin";
  write_tensors(path, tensors);
  EXPECT_EQ(encode_tensors(read_tensors(path)), bytes);
  std::filesystem::remove(path);
}

TEST(Determinism, RepeatedForwardIsBitwiseStable) {
  std::mt19937_64 rng(14);
  Tensor x = random_tensor({2, 3, 6, 6}, rng);
  ConvParams p = random_conv(3, 4, 5, rng);
  EXPECT_TRUE(bitwise_equal(conv2d(x, p).values(), conv2d(x, p).values()));
}
