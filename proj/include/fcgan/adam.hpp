#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "fcgan/params.hpp"

namespace fcgan {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// One bias-corrected Adam update at timestep t >= 1. `name` labels the
/// diagnostic raised for a non-finite gradient.
template <typename T>
void adam_step(Tensor<T>& param, const Tensor<T>& grad, Tensor<T>& m, Tensor<T>& v, std::int64_t t,
               const AdamConfig& config, const std::string& name = "parameter") {
  if (t < 1) fail(ErrorKind::kValue, "adam_step: timestep must be >= 1");
  if (param.shape() != grad.shape() || param.shape() != m.shape() || param.shape() != v.shape()) {
    fail(ErrorKind::kShape, "adam_step: '" + name + "' has mismatched parameter, gradient or moment shapes");
  }
  if (!grad.all_finite()) fail(ErrorKind::kNonFinite, "gradient of '" + name + "' contains NaN or Inf");
  const double correction1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double correction2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  const T b1 = static_cast<T>(config.beta1);
  const T b2 = static_cast<T>(config.beta2);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const T g = grad[i];
    m[i] = b1 * m[i] + (T{1} - b1) * g;
    v[i] = b2 * v[i] + (T{1} - b2) * g * g;
    const double m_hat = static_cast<double>(m[i]) / correction1;
    const double v_hat = static_cast<double>(v[i]) / correction2;
    param[i] = static_cast<T>(static_cast<double>(param[i]) -
                              config.learning_rate * m_hat / (std::sqrt(v_hat) + config.eps));
  }
}

template <typename T>
void adam_step(ParameterSet<T>& params, std::int64_t t, const AdamConfig& config) {
  for (auto& p : params) adam_step(p.value, p.grad, p.adam_m, p.adam_v, t, config, p.name);
}

}  // namespace fcgan
