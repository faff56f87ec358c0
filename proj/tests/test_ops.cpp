#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fcgan/ops.hpp"
#include "fcgan/params.hpp"
#include "test_util.hpp"

namespace fcgan {
namespace {

using test::random_tensor;

// Direct 6-loop cross-correlation, kernel 4, used as the reference for the im2col path.
Tensor<double> naive_conv2d(const Tensor<double>& x, const Tensor<double>& w, const Tensor<double>& b,
                            std::size_t pad, std::size_t stride) {
  const std::size_t oh = (x.h() + 2 * pad - 4) / stride + 1;
  const std::size_t ow = (x.w() + 2 * pad - 4) / stride + 1;
  Tensor<double> y({x.n(), w.dim(0), oh, ow});
  for (std::size_t n = 0; n < x.n(); ++n)
    for (std::size_t co = 0; co < w.dim(0); ++co)
      for (std::size_t oy = 0; oy < oh; ++oy)
        for (std::size_t ox = 0; ox < ow; ++ox) {
          double sum = b[co];
          for (std::size_t ci = 0; ci < x.c(); ++ci)
            for (std::size_t ky = 0; ky < 4; ++ky)
              for (std::size_t kx = 0; kx < 4; ++kx) {
                const long iy = static_cast<long>(oy * stride + ky) - static_cast<long>(pad);
                const long ix = static_cast<long>(ox * stride + kx) - static_cast<long>(pad);
                if (iy < 0 || ix < 0 || iy >= static_cast<long>(x.h()) || ix >= static_cast<long>(x.w())) continue;
                sum += x.at(n, ci, iy, ix) * w.at(co, ci, ky, kx);
              }
          y.at(n, co, oy, ox) = sum;
        }
  return y;
}

TEST(Conv2d, FirstGeneratorLayerHalvesTo64x64x64) {
  const Tensor<float> x({1, 3, 128, 128}, 0.5f);
  const Tensor<float> w({64, 3, 4, 4}, 0.01f);
  const Tensor<float> b({64});
  EXPECT_EQ(conv2d(x, w, b).shape(), (Shape{1, 64, 64, 64}));
}

TEST(Conv2d, ZeroInputZeroBiasGivesZeroOutput) {
  std::mt19937_64 rng(1);
  const Tensor<double> x({2, 3, 8, 8});
  const Tensor<double> y = conv2d(x, random_tensor({5, 3, 4, 4}, rng), Tensor<double>({5}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(Conv2d, AllOnesCountsValidTaps) {
  const Tensor<double> x({1, 1, 4, 4}, 1.0);
  const Tensor<double> w({1, 1, 4, 4}, 1.0);
  const Tensor<double> b({1});
  const Tensor<double> y = conv2d(x, w, b);
  ASSERT_EQ(y.shape(), (Shape{1, 1, 2, 2}));
  // Each 4x4 window over the padded 6x6 grid covers 3 real rows and 3 real columns.
  const Tensor<double> reference = naive_conv2d(x, w, b, 1, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    EXPECT_EQ(reference[i], 9.0);
    EXPECT_EQ(y[i], 9.0);
  }
}

TEST(Conv2d, MatchesDirectSummation) {
  std::mt19937_64 rng(2);
  const auto x = random_tensor({2, 3, 8, 6}, rng);
  const auto w = random_tensor({4, 3, 4, 4}, rng);
  const auto b = random_tensor({4}, rng);
  const auto fast = conv2d(x, w, b);
  const auto slow = naive_conv2d(x, w, b, 1, 2);
  ASSERT_EQ(fast.shape(), slow.shape());
  for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12);
}

TEST(Conv2d, GeneralStrideAndPadding) {
  std::mt19937_64 rng(3);
  const auto x = random_tensor({1, 2, 7, 7}, rng);
  const auto w = random_tensor({3, 2, 4, 4}, rng);
  const auto b = random_tensor({3}, rng);
  const auto fast = conv2d(x, w, b, 0, 1);
  const auto slow = naive_conv2d(x, w, b, 0, 1);
  ASSERT_EQ(fast.shape(), (Shape{1, 3, 4, 4}));
  for (std::size_t i = 0; i < fast.size(); ++i) EXPECT_NEAR(fast[i], slow[i], 1e-12);
}

TEST(Conv2d, ShapeErrorsNameTheDimension) {
  const Tensor<float> w({4, 3, 4, 4});
  const Tensor<float> b({4});
  try {
    conv2d(Tensor<float>({1, 2, 8, 8}), w, b);
    FAIL() << "channel mismatch accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
    EXPECT_NE(std::string(e.what()).find("channel"), std::string::npos);
  }
  try {
    conv2d(Tensor<float>({1, 3, 7, 8}), w, b);
    FAIL() << "odd height accepted";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kShape);
    EXPECT_NE(std::string(e.what()).find("even"), std::string::npos);
  }
  EXPECT_THROW(conv2d(Tensor<float>({1, 3, 8, 8}), w, Tensor<float>({3})), Error);
  EXPECT_THROW(conv2d(Tensor<float>({3, 8, 8}), w, b), Error);
}

TEST(ConvTranspose2d, DoublesSpatialSize) {
  const Tensor<float> x({1, 512, 2, 2}, 0.1f);
  const Tensor<float> w({512, 512, 4, 4}, 0.01f);
  EXPECT_EQ(conv_transpose2d(x, w, Tensor<float>({512})).shape(), (Shape{1, 512, 4, 4}));
}

TEST(ConvTranspose2d, ZeroInputZeroOutput) {
  std::mt19937_64 rng(4);
  const auto y = conv_transpose2d(Tensor<double>({1, 2, 4, 4}), random_tensor({2, 3, 4, 4}, rng), Tensor<double>({3}));
  EXPECT_EQ(y.shape(), (Shape{1, 3, 8, 8}));
  for (double v : y.data()) EXPECT_EQ(v, 0.0);
}

TEST(ConvTranspose2d, IsAdjointOfConv2d) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    for (auto [c_in, c_out, side] : {std::tuple{2, 3, 8}, std::tuple{3, 2, 16}, std::tuple{1, 1, 2}}) {
      const auto x = random_tensor({1, std::size_t(c_in), std::size_t(side), std::size_t(side)}, rng);
      const auto w = random_tensor({std::size_t(c_out), std::size_t(c_in), 4, 4}, rng);
      const auto y = random_tensor({1, std::size_t(c_out), std::size_t(side / 2), std::size_t(side / 2)}, rng);
      const double lhs = inner_product(conv2d(x, w, Tensor<double>({std::size_t(c_out)})), y);
      const double rhs = inner_product(x, conv_transpose2d(y, w, Tensor<double>({std::size_t(c_in)})));
      EXPECT_NEAR(lhs, rhs, 1e-5 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST(ConvTranspose2d, ChannelMismatchIsAnError) {
  EXPECT_THROW(conv_transpose2d(Tensor<float>({1, 3, 2, 2}), Tensor<float>({4, 2, 4, 4}), Tensor<float>({2})), Error);
}

TEST(ShapeAlgebra, DownThenUpRestoresEverySize) {
  for (std::size_t side = 2; side <= 128; side *= 2) {
    const Tensor<float> x({1, 1, side, side}, 1.0f);
    const Tensor<float> w({1, 1, 4, 4}, 0.1f);
    const Tensor<float> b({1});
    const auto down = conv2d(x, w, b);
    EXPECT_EQ(down.h(), side / 2);
    EXPECT_EQ(conv_transpose2d(down, w, b).shape(), x.shape());
  }
}

TEST(LeakyRelu, Definition) {
  const Tensor<double> v({3}, std::vector<double>{-2.0, 0.0, 3.0});
  const auto y = leaky_relu(v, 0.2);
  EXPECT_DOUBLE_EQ(y[0], -0.4);
  EXPECT_EQ(y[1], 0.0);
  EXPECT_EQ(y[2], 3.0);
  EXPECT_DOUBLE_EQ(leaky_relu(Tensor<double>({1}, -1.0), 0.2)[0], -0.2);
  EXPECT_EQ(leaky_relu(Tensor<double>({1}, 1.0), 0.7)[0], 1.0);
}

TEST(LeakyRelu, IdentityOnNonNegativesAndPositivelyHomogeneous) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> scale(0.0, 10.0);
  for (int trial = 0; trial < 50; ++trial) {
    const auto x = random_tensor({64}, rng);
    const double c = scale(rng);
    Tensor<double> cx = x;
    for (double& v : cx.data()) v *= c;
    const auto y = leaky_relu(x, 0.2);
    const auto cy = leaky_relu(cx, 0.2);
    for (std::size_t i = 0; i < x.size(); ++i) {
      if (x[i] >= 0) EXPECT_EQ(y[i], x[i]);
      EXPECT_NEAR(cy[i], c * y[i], 1e-12 * (1.0 + std::abs(cy[i])));
    }
  }
}

TEST(LeakyRelu, RejectsBadSlopeAndNonFiniteInput) {
  EXPECT_THROW(leaky_relu(Tensor<double>({1}), 2.0), Error);
  EXPECT_THROW(leaky_relu(Tensor<double>({1}), 0.0), Error);
  Tensor<double> bad({2});
  bad[1] = std::nan("");
  try {
    leaky_relu(bad, 0.2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFinite);
  }
}

TEST(Concat, PaperChannelCounts) {
  EXPECT_EQ(concat_channels(Tensor<float>({1, 512, 4, 4}), Tensor<float>({1, 512, 4, 4})).shape(), (Shape{1, 1024, 4, 4}));
  EXPECT_EQ(concat_channels(Tensor<float>({2, 64, 64, 64}), Tensor<float>({2, 64, 64, 64})).shape(),
            (Shape{2, 128, 64, 64}));
}

TEST(Concat, SlicesRecoverBothInputs) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_int_distribution<std::size_t> dim(1, 4);
    const std::size_t n = dim(rng), ca = dim(rng), cb = dim(rng), h = dim(rng), w = dim(rng);
    const auto a = random_tensor({n, ca, h, w}, rng);
    const auto b = random_tensor({n, cb, h, w}, rng);
    const auto joined = concat_channels(a, b);
    EXPECT_EQ(slice_channels(joined, 0, ca), a);
    EXPECT_EQ(slice_channels(joined, ca, ca + cb), b);
  }
}

TEST(Concat, MismatchIsAnError) {
  EXPECT_THROW(concat_channels(Tensor<float>({1, 2, 4, 4}), Tensor<float>({1, 2, 4, 8})), Error);
  EXPECT_THROW(concat_channels(Tensor<float>({1, 2, 4, 4}), Tensor<float>({2, 2, 4, 4})), Error);
}

TEST(L1Mean, Values) {
  const Tensor<double> a({2}, std::vector<double>{1.0, 2.0});
  const Tensor<double> b({2}, std::vector<double>{0.0, 4.0});
  EXPECT_DOUBLE_EQ(l1_mean(a, b), 1.5);
  EXPECT_EQ(l1_mean(a, a), 0.0);
  Tensor<double> a3 = a, b3 = b;
  for (double& v : a3.data()) v *= 3.0;
  for (double& v : b3.data()) v *= 3.0;
  EXPECT_DOUBLE_EQ(l1_mean(a3, b3), 3.0 * 1.5);
  EXPECT_THROW(l1_mean(a, Tensor<double>({3})), Error);
}

TEST(L1Mean, SubgradientIsZeroAtTies) {
  const Tensor<double> a({3}, std::vector<double>{1.0, 2.0, 3.0});
  const Tensor<double> b({3}, std::vector<double>{0.0, 2.0, 4.0});
  const auto g = l1_mean_grad(a, b);
  EXPECT_DOUBLE_EQ(g[0], 1.0 / 3.0);
  EXPECT_EQ(g[1], 0.0);
  EXPECT_DOUBLE_EQ(g[2], -1.0 / 3.0);
}

TEST(InitParams, DeterministicWithZeroBiasAndSmallMean) {
  const std::vector<LayerSpec> layers{{"a", LayerKind::kDown, 64, 64}, {"b", LayerKind::kUp, 64, 3}};
  const auto p1 = init_params<float>(layers, 42);
  const auto p2 = init_params<float>(layers, 42);
  ASSERT_EQ(p1.size(), 4u);
  for (std::size_t i = 0; i < p1.size(); ++i) EXPECT_EQ(p1[i].value, p2[i].value);
  for (float v : p1.get("a.bias").value.data()) EXPECT_EQ(v, 0.0f);
  for (float v : p1.get("b.bias").value.data()) EXPECT_EQ(v, 0.0f);

  const auto& w = p1.get("a.weight").value;
  ASSERT_EQ(w.size(), 4u * 4 * 64 * 64);
  double mean = 0.0, sq = 0.0;
  for (float v : w.data()) mean += v;
  mean /= static_cast<double>(w.size());
  for (float v : w.data()) sq += (v - mean) * (v - mean);
  EXPECT_LT(std::abs(mean), 3.0 * 0.02 / std::sqrt(static_cast<double>(w.size())));
  EXPECT_NEAR(std::sqrt(sq / static_cast<double>(w.size())), 0.02, 0.001);

  const auto p3 = init_params<float>(layers, 43);
  EXPECT_FALSE(p1.get("a.weight").value == p3.get("a.weight").value);
}

}  // namespace
}  // namespace fcgan
