#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "fcgan/ops.hpp"
#include "fcgan/tensor.hpp"

namespace fcgan {

inline constexpr double kInitStddev = 0.02;

enum class LayerKind { kDown, kUp };

/// One 4x4 stride-2 convolution of a network.
struct LayerSpec {
  std::string name;
  LayerKind kind;
  std::size_t in_channels;
  std::size_t out_channels;

  Shape weight_shape() const {
    return kind == LayerKind::kDown ? Shape{out_channels, in_channels, kKernel, kKernel}
                                    : Shape{in_channels, out_channels, kKernel, kKernel};
  }
  std::size_t param_count() const {
    return in_channels * out_channels * kKernel * kKernel + out_channels;
  }
};

/// A named tensor with its gradient buffer and Adam moments.
template <typename T>
struct Parameter {
  std::string name;
  Tensor<T> value;
  Tensor<T> grad;
  Tensor<T> adam_m;
  Tensor<T> adam_v;

  Parameter(std::string param_name, Tensor<T> initial)
      : name(std::move(param_name)),
        value(std::move(initial)),
        grad(value.shape()),
        adam_m(value.shape()),
        adam_v(value.shape()) {
    value.set_requires_grad(true);
  }
};

/// Ordered parameters of one network (weights then bias per layer).
template <typename T>
class ParameterSet {
 public:
  ParameterSet() = default;

  void add(std::string name, Tensor<T> value) { params_.emplace_back(std::move(name), std::move(value)); }

  std::size_t size() const noexcept { return params_.size(); }
  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }
  Parameter<T>& operator[](std::size_t i) { return params_[i]; }
  const Parameter<T>& operator[](std::size_t i) const { return params_[i]; }

  const Parameter<T>* find(const std::string& name) const {
    for (const auto& p : params_) {
      if (p.name == name) return &p;
    }
    return nullptr;
  }
  Parameter<T>* find(const std::string& name) {
    return const_cast<Parameter<T>*>(std::as_const(*this).find(name));
  }
  const Parameter<T>& get(const std::string& name) const {
    const Parameter<T>* p = find(name);
    if (!p) fail(ErrorKind::kValue, "no parameter named '" + name + "'");
    return *p;
  }
  Parameter<T>& get(const std::string& name) {
    return const_cast<Parameter<T>&>(std::as_const(*this).get(name));
  }

  void zero_grad() {
    for (auto& p : params_) p.grad.fill(T{0});
  }

  std::size_t scalar_count() const {
    std::size_t total = 0;
    for (const auto& p : params_) total += p.value.size();
    return total;
  }

  template <typename U>
  ParameterSet<U> cast() const {
    ParameterSet<U> out;
    for (const auto& p : params_) {
      out.add(p.name, p.value.template cast<U>());
      auto& q = out[out.size() - 1];
      q.grad = p.grad.template cast<U>();
      q.adam_m = p.adam_m.template cast<U>();
      q.adam_v = p.adam_v.template cast<U>();
    }
    return out;
  }

 private:
  std::vector<Parameter<T>> params_;
};

/// Weights ~ N(0, 0.02^2) drawn layer by layer from a seeded generator; biases zero.
template <typename T>
ParameterSet<T> init_params(const std::vector<LayerSpec>& layers, std::uint64_t seed,
                            double stddev = kInitStddev) {
  std::mt19937_64 engine(seed);
  std::normal_distribution<double> normal(0.0, stddev);
  ParameterSet<T> params;
  for (const auto& layer : layers) {
    Tensor<T> weight(layer.weight_shape());
    for (T& v : weight.data()) v = static_cast<T>(normal(engine));
    params.add(layer.name + ".weight", std::move(weight));
    params.add(layer.name + ".bias", Tensor<T>({layer.out_channels}));
  }
  return params;
}

}  // namespace fcgan
