#pragma once

// Central-difference gradient oracle and the built-in suite run by the
// `gradcheck` subcommand.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "fcgan/ops.hpp"
#include "fcgan/params.hpp"

namespace fcgan {

inline constexpr double kGradCheckTolerance = 1e-4;
inline constexpr std::size_t kGradCheckMaxCoords = 200;

/// Evaluates a scalar objective and writes its analytic gradient into each
/// parameter's `grad` buffer.
using Objective = std::function<double(ParameterSet<double>&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t coordinates = 0;
};

/// Compares analytic gradients to (f(p + eps) - f(p - eps)) / (2 eps) on at most
/// `max_coords` sampled coordinates per tensor. Relative error uses the
/// denominator max(|analytic|, |numeric|, 1e-8).
inline GradCheckResult grad_check(const Objective& f, const ParameterSet<double>& params,
                                  double eps, std::size_t max_coords = kGradCheckMaxCoords,
                                  std::uint64_t seed = 0) {
  ParameterSet<double> work = params;
  work.zero_grad();
  f(work);
  std::vector<Tensor<double>> analytic;
  for (const auto& p : work) {
    if (!p.grad.all_finite()) {
      fail(ErrorKind::kNonFinite, "analytic gradient of '" + p.name + "' is not finite");
    }
    analytic.push_back(p.grad);
  }

  std::mt19937_64 engine(seed);
  GradCheckResult result;
  for (std::size_t k = 0; k < work.size(); ++k) {
    auto& p = work[k];
    std::vector<std::size_t> coords(p.value.size());
    std::iota(coords.begin(), coords.end(), std::size_t{0});
    if (coords.size() > max_coords) {
      std::shuffle(coords.begin(), coords.end(), engine);
      coords.resize(max_coords);
    }
    for (std::size_t i : coords) {
      const double saved = p.value[i];
      p.value[i] = saved + eps;
      const double plus = f(work);
      p.value[i] = saved - eps;
      const double minus = f(work);
      p.value[i] = saved;
      const double numeric = (plus - minus) / (2.0 * eps);
      const double exact = analytic[k][i];
      const double denom = std::max({std::abs(exact), std::abs(numeric), 1e-8});
      const double rel = std::abs(exact - numeric) / denom;
      ++result.coordinates;
      if (rel > result.max_relative_error || result.worst_parameter.empty()) {
        result.max_relative_error = std::max(rel, result.max_relative_error);
        result.worst_parameter = p.name;
      }
    }
  }
  return result;
}

struct GradCheckCase {
  std::string name;
  GradCheckResult result;
  double seconds = 0.0;

  bool passed() const { return result.max_relative_error < kGradCheckTolerance; }
};

namespace detail {

inline Tensor<double> random_tensor(Shape shape, std::mt19937_64& engine, double scale = 1.0) {
  std::normal_distribution<double> normal(0.0, scale);
  Tensor<double> t(std::move(shape));
  for (double& v : t.data()) v = normal(engine);
  return t;
}

// Linear functional <r, y> and its gradient r; smooth, so central differences are exact up to rounding.
inline double weighted_sum(const Tensor<double>& y, const Tensor<double>& r) {
  return inner_product(y, r);
}

}  // namespace detail

/// The primitives in isolation plus a conv -> leaky_relu -> conv_transpose -> L1
/// composite, on 1x2x8x8 inputs in double precision.
inline std::vector<GradCheckCase> run_gradcheck_suite(std::uint64_t seed = 7,
                                                      double slope = kDefaultLeakySlope) {
  constexpr double kEps = 1e-6;
  std::mt19937_64 engine(seed);
  std::vector<GradCheckCase> cases;

  auto run = [&](std::string name, const Objective& f, const ParameterSet<double>& p) {
    const auto start = std::chrono::steady_clock::now();
    GradCheckCase c{std::move(name), grad_check(f, p, kEps, kGradCheckMaxCoords, seed), 0.0};
    c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    cases.push_back(std::move(c));
  };

  {
    ParameterSet<double> p;
    p.add("x", detail::random_tensor({1, 2, 8, 8}, engine));
    p.add("weight", detail::random_tensor({3, 2, 4, 4}, engine, 0.5));
    p.add("bias", detail::random_tensor({3}, engine));
    const Tensor<double> r = detail::random_tensor({1, 3, 4, 4}, engine);
    run("conv2d", [r](ParameterSet<double>& ps) {
      auto& x = ps.get("x");
      auto& w = ps.get("weight");
      auto& b = ps.get("bias");
      const double value = detail::weighted_sum(conv2d(x.value, w.value, b.value), r);
      auto g = conv2d_backward(x.value, w.value, r);
      x.grad = g.input;
      w.grad = g.weight;
      b.grad = g.bias;
      return value;
    }, p);
  }
  {
    ParameterSet<double> p;
    p.add("x", detail::random_tensor({1, 2, 8, 8}, engine));
    p.add("weight", detail::random_tensor({2, 3, 4, 4}, engine, 0.5));
    p.add("bias", detail::random_tensor({3}, engine));
    const Tensor<double> r = detail::random_tensor({1, 3, 16, 16}, engine);
    run("conv_transpose2d", [r](ParameterSet<double>& ps) {
      auto& x = ps.get("x");
      auto& w = ps.get("weight");
      auto& b = ps.get("bias");
      const double value = detail::weighted_sum(conv_transpose2d(x.value, w.value, b.value), r);
      auto g = conv_transpose2d_backward(x.value, w.value, r);
      x.grad = g.input;
      w.grad = g.weight;
      b.grad = g.bias;
      return value;
    }, p);
  }
  {
    ParameterSet<double> p;
    p.add("x", detail::random_tensor({1, 2, 8, 8}, engine));
    const Tensor<double> r = detail::random_tensor({1, 2, 8, 8}, engine);
    run("leaky_relu", [r, slope](ParameterSet<double>& ps) {
      auto& x = ps.get("x");
      const double value = detail::weighted_sum(leaky_relu(x.value, slope), r);
      x.grad = leaky_relu_backward(x.value, r, slope);
      return value;
    }, p);
  }
  {
    ParameterSet<double> p;
    p.add("a", detail::random_tensor({1, 2, 8, 8}, engine));
    p.add("b", detail::random_tensor({1, 2, 8, 8}, engine));
    run("l1_mean", [](ParameterSet<double>& ps) {
      auto& a = ps.get("a");
      auto& b = ps.get("b");
      const double value = l1_mean(a.value, b.value);
      a.grad = l1_mean_grad(a.value, b.value);
      b.grad = l1_mean_grad(a.value, b.value, -1.0);
      return value;
    }, p);
  }
  {
    ParameterSet<double> p;
    p.add("x", detail::random_tensor({1, 2, 8, 8}, engine));
    p.add("down.weight", detail::random_tensor({4, 2, 4, 4}, engine, 0.5));
    p.add("down.bias", detail::random_tensor({4}, engine, 0.1));
    p.add("up.weight", detail::random_tensor({4, 2, 4, 4}, engine, 0.5));
    p.add("up.bias", detail::random_tensor({2}, engine, 0.1));
    const Tensor<double> target = detail::random_tensor({1, 2, 8, 8}, engine);
    run("composite conv2d-leaky_relu-conv_transpose2d-l1", [target, slope](ParameterSet<double>& ps) {
      auto& x = ps.get("x");
      auto& w1 = ps.get("down.weight");
      auto& b1 = ps.get("down.bias");
      auto& w2 = ps.get("up.weight");
      auto& b2 = ps.get("up.bias");
      const Tensor<double> pre = conv2d(x.value, w1.value, b1.value);
      const Tensor<double> hidden = leaky_relu(pre, slope);
      const Tensor<double> out = conv_transpose2d(hidden, w2.value, b2.value);
      const double value = l1_mean(out, target);
      auto up = conv_transpose2d_backward(hidden, w2.value, l1_mean_grad(out, target));
      auto down = conv2d_backward(x.value, w1.value, leaky_relu_backward(pre, up.input, slope));
      w2.grad = up.weight;
      b2.grad = up.bias;
      w1.grad = down.weight;
      b1.grad = down.bias;
      x.grad = down.input;
      return value;
    }, p);
  }
  return cases;
}

}  // namespace fcgan
