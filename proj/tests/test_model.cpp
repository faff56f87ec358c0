#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fcgan/gradcheck.hpp"
#include "fcgan/model.hpp"
#include "test_util.hpp"

namespace fcgan {
namespace {

using test::random_tensor;

std::vector<std::string> trace_strings(const std::vector<FeatureShape>& trace) {
  std::vector<std::string> out;
  for (const auto& s : trace) out.push_back(s.str());
  return out;
}

const std::vector<std::string> kGeneratorTrace{
    "128x128x3", "64x64x64", "32x32x128", "16x16x256", "8x8x512",  "4x4x512",   "2x2x512",
    "4x4x1024",  "8x8x1024", "16x16x512", "32x32x256", "64x64x128", "128x128x3"};

TEST(ShapeTrace, GeneratorMatchesPublishedSequence) {
  EXPECT_EQ(trace_strings(shape_trace(generator_spec(), {128, 128, 3})), kGeneratorTrace);
}

TEST(ShapeTrace, DiscriminatorElevenEntries) {
  const std::vector<std::string> expected{"128x128x6", "64x64x64", "32x32x128", "16x16x256", "8x8x512", "4x4x512",
                                          "8x8x1024",  "16x16x512", "32x32x256", "64x64x128", "128x128x6"};
  EXPECT_EQ(trace_strings(shape_trace(discriminator_spec(), {128, 128, 6})), expected);
  EXPECT_EQ(network_layers(discriminator_spec()).size(), 10u);
  EXPECT_EQ(network_layers(generator_spec()).size(), 12u);
}

TEST(ShapeTrace, WidthMultiplierKeepsImageChannels) {
  const std::vector<std::string> expected{"128x128x3", "64x64x8",  "32x32x16", "16x16x32", "8x8x64", "4x4x64", "2x2x64",
                                          "4x4x128",   "8x8x128",  "16x16x64", "32x32x32", "64x64x16", "128x128x3"};
  EXPECT_EQ(trace_strings(shape_trace(generator_spec({1, 8}), {128, 128, 3})), expected);
  const auto d = shape_trace(discriminator_spec({1, 8}), {128, 128, 6});
  EXPECT_EQ(d.front().channels, 6u);
  EXPECT_EQ(d.back().channels, 6u);
}

TEST(ShapeTrace, RejectsBadInputs) {
  EXPECT_THROW(shape_trace(generator_spec(), {128, 128, 6}), Error);
  EXPECT_THROW(shape_trace(generator_spec(), {96, 96, 3}), Error);
}

TEST(ParamCount, HandComputedLayers) {
  const auto layers = network_layers(generator_spec());
  EXPECT_EQ(layers.front().param_count(), 64u * 3 * 16 + 64);
  EXPECT_EQ(layers.front().param_count(), 3136u);
  // dec2 consumes the 1024-channel concatenation and emits 512.
  EXPECT_EQ(layers[7].name, "dec2");
  EXPECT_EQ(layers[7].in_channels, 1024u);
  EXPECT_EQ(layers[7].param_count(), 1024u * 512 * 16 + 512);

  std::size_t manual = 0;
  const std::size_t enc[] = {3, 64, 128, 256, 512, 512, 512};
  for (int i = 0; i < 6; ++i) manual += enc[i] * enc[i + 1] * 16 + enc[i + 1];
  const std::size_t dec_in[] = {512, 1024, 1024, 512, 256, 128};
  const std::size_t dec_out[] = {512, 512, 256, 128, 64, 3};
  for (int j = 0; j < 6; ++j) manual += dec_in[j] * dec_out[j] * 16 + dec_out[j];
  EXPECT_EQ(param_count(generator_spec()), manual);
}

TEST(Network, BatchForwardShapesAndTapeTrace) {
  const auto spec = generator_spec({1, 8});
  const auto params = init_network<float>(spec, 3);
  std::mt19937_64 rng(1);
  const Tensor<float> x = random_tensor({2, 3, 128, 128}, rng, 0.5).cast<float>();
  ForwardTape<float> tape;
  const auto y = generator_forward(spec, params, x, 0.2, &tape);
  EXPECT_EQ(y.shape(), (Shape{2, 3, 128, 128}));
  EXPECT_EQ(trace_strings(tape.trace()), trace_strings(shape_trace(spec, {128, 128, 3})));
  for (float v : y.data()) {
    EXPECT_GE(v, -1.0f);
    EXPECT_LE(v, 1.0f);
  }
  EXPECT_EQ(generator_forward(spec, params, x), y);
}

TEST(Network, WrongInputsAreShapeErrors) {
  const auto g = generator_spec({1, 8});
  const auto gp = init_network<float>(g, 3);
  EXPECT_THROW(generator_forward(g, gp, Tensor<float>({1, 6, 128, 128})), Error);
  EXPECT_THROW(generator_forward(g, gp, Tensor<float>({1, 3, 96, 96})), Error);
  EXPECT_THROW(generator_forward(g, gp, Tensor<float>({1, 3, 128, 64})), Error);
  const auto d = discriminator_spec({1, 8});
  EXPECT_THROW(discriminator_forward(d, init_network<float>(d, 1), Tensor<float>({1, 3, 128, 128})), Error);
}

TEST(Network, MakePairPutsConditionFirst) {
  std::mt19937_64 rng(2);
  const auto z = random_tensor({2, 3, 4, 4}, rng);
  const auto y = random_tensor({2, 3, 4, 4}, rng);
  const auto p = make_pair(z, y);
  EXPECT_EQ(p.shape(), (Shape{2, 6, 4, 4}));
  EXPECT_EQ(slice_channels(p, 0, 3), z);
  EXPECT_EQ(slice_channels(p, 3, 6), y);
}

TEST(Network, BackwardReachesEveryParameter) {
  const auto spec = generator_spec({1, 16});
  auto params = init_network<float>(spec, 5);
  std::mt19937_64 rng(3);
  const Tensor<float> x = random_tensor({1, 3, 64, 64}, rng, 0.5).cast<float>();
  const Tensor<float> target = random_tensor({1, 3, 64, 64}, rng, 0.5).cast<float>();
  ForwardTape<float> tape;
  const auto y = network_forward(spec, params, x, 0.2, &tape);
  params.zero_grad();
  network_backward(spec, params, tape, l1_mean_grad(y, target), 0.2);
  for (const auto& p : params) {
    double norm = 0.0;
    for (float g : p.grad.data()) norm += std::abs(g);
    EXPECT_GT(norm, 0.0) << p.name;
  }
}

// Full-network gradient in double precision against central differences.
TEST(Network, SmallNetworkGradientMatchesFiniteDifferences) {
  NetworkSpec spec{"tiny", 2, {3, 4}, {3, 2}, {1, 1}};
  auto params = init_network<double>(spec, 11);
  for (auto& p : params) {
    std::mt19937_64 rng(std::hash<std::string>{}(p.name));
    p.value = random_tensor(p.value.shape(), rng, 0.3);
  }
  std::mt19937_64 rng(4);
  const auto x = random_tensor({1, 2, 8, 8}, rng);
  const auto target = random_tensor({1, 2, 8, 8}, rng, 0.5);
  const Objective f = [&](ParameterSet<double>& ps) {
    ForwardTape<double> tape;
    const auto y = network_forward(spec, ps, x, 0.2, &tape);
    ps.zero_grad();
    network_backward(spec, ps, tape, l1_mean_grad(y, target), 0.2);
    return l1_mean(y, target);
  };
  const auto result = grad_check(f, params, 1e-6, 60, 1);
  EXPECT_LT(result.max_relative_error, 1e-4) << result.worst_parameter;
}

TEST(GradCheck, QuadraticIsExact) {
  ParameterSet<double> p;
  p.add("x", Tensor<double>({3}, std::vector<double>{0.5, -1.0, 2.0}));
  const Objective f = [](ParameterSet<double>& ps) {
    auto& x = ps.get("x");
    double sum = 0.0;
    for (std::size_t i = 0; i < x.value.size(); ++i) {
      sum += x.value[i] * x.value[i];
      x.grad[i] = 2.0 * x.value[i];
    }
    return sum;
  };
  EXPECT_LT(grad_check(f, p, 1e-4).max_relative_error, 1e-6);
}

TEST(GradCheck, ConstantObjectiveHasZeroGradient) {
  ParameterSet<double> p;
  p.add("x", Tensor<double>({4}, 1.0));
  const Objective f = [](ParameterSet<double>& ps) {
    ps.get("x").grad.fill(0.0);
    return 3.0;
  };
  EXPECT_EQ(grad_check(f, p, 1e-6).max_relative_error, 0.0);
}

TEST(GradCheck, NonFiniteAnalyticGradientNamesParameter) {
  ParameterSet<double> p;
  p.add("w", Tensor<double>({2}, 1.0));
  const Objective f = [](ParameterSet<double>& ps) {
    ps.get("w").grad[0] = std::nan("");
    return 0.0;
  };
  try {
    grad_check(f, p, 1e-6);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kNonFinite);
    EXPECT_NE(std::string(e.what()).find("'w'"), std::string::npos);
  }
}

TEST(GradCheck, SuitePasses) {
  const auto cases = run_gradcheck_suite(7);
  EXPECT_EQ(cases.size(), 5u);
  for (const auto& c : cases) EXPECT_TRUE(c.passed()) << c.name << " " << c.result.max_relative_error;
}

}  // namespace
}  // namespace fcgan
