#pragma once

// Pixel-wise L1 losses and the boundary-equilibrium controller.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>

#include "fcgan/model.hpp"
#include "fcgan/ops.hpp"

namespace fcgan {

inline constexpr double kDefaultGamma = 0.5;
inline constexpr double kDefaultLambdaK = 0.001;

/// Proportional controller state. `k` weights the fake-sample term of the
/// discriminator objective and always lies in [0, 1].
struct EquilibriumState {
  double k = 0.0;
  double gamma = kDefaultGamma;
  double lambda_k = kDefaultLambdaK;
  std::int64_t step = 0;

  void validate() const {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
      fail(ErrorKind::kValue, "gamma must lie in (0, 1], got " + std::to_string(gamma));
    }
    if (!(lambda_k >= 0.0) || !std::isfinite(lambda_k)) {
      fail(ErrorKind::kValue, "lambda_k must be a finite non-negative gain, got " + std::to_string(lambda_k));
    }
    if (!(k >= 0.0 && k <= 1.0)) fail(ErrorKind::kValue, "k outside [0, 1]: " + std::to_string(k));
  }
};

/// Per-step scalars written to the metrics log.
struct LossReport {
  std::int64_t step = 0;
  double l_g = 0.0;
  double l_dr = 0.0;
  double l_df = 0.0;
  double l_d = 0.0;
  double k = 0.0;  // controller value used for this step's discriminator objective
  double m_c = 0.0;
};

/// L_G: mean absolute error between generated and real HR images.
template <typename T>
double generator_loss(const Tensor<T>& fake_hr, const Tensor<T>& real_hr) {
  return l1_mean(fake_hr, real_hr);
}

/// (L_Dr, L_Df): reconstruction errors of the discriminator on the real and fake pairs.
template <typename T>
std::pair<double, double> discriminator_losses(const NetworkSpec& spec, const ParameterSet<T>& d_params,
                                               const Tensor<T>& real_pair, const Tensor<T>& fake_pair,
                                               double slope = kDefaultLeakySlope) {
  require_same_shape(real_pair, fake_pair, "discriminator_losses");
  const double l_dr = l1_mean(discriminator_forward(spec, d_params, real_pair, slope), real_pair);
  const double l_df = l1_mean(discriminator_forward(spec, d_params, fake_pair, slope), fake_pair);
  return {l_dr, l_df};
}

/// L_D = L_Dr - k L_Df. With k = 1 this is the unweighted difference.
inline double discriminator_objective(double l_dr, double l_df, const EquilibriumState& state) {
  return l_dr - state.k * l_df;
}

/// k' = clamp(k + lambda_k (gamma L_Dr - L_G), 0, 1).
inline EquilibriumState equilibrium_step(EquilibriumState state, double l_dr, double l_g) {
  if (!std::isfinite(l_dr) || !std::isfinite(l_g)) {
    fail(ErrorKind::kNonFinite, "equilibrium_step: non-finite loss (L_Dr = " + std::to_string(l_dr) +
                                    ", L_G = " + std::to_string(l_g) + ")");
  }
  state.k = std::clamp(state.k + state.lambda_k * (state.gamma * l_dr - l_g), 0.0, 1.0);
  ++state.step;
  return state;
}

/// M_c = L_Dr + |gamma L_Dr - L_G|.
inline double convergence_measure(double l_dr, double l_g, double gamma) {
  return l_dr + std::abs(gamma * l_dr - l_g);
}

}  // namespace fcgan
