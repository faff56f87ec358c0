#pragma once

// Skip-connected encoder/decoder networks: the generator maps a bicubic
// upsample (N,3,S,S) to a super-resolved image, the discriminator
// autoencodes a (condition, candidate) pair of shape (N,6,S,S).

#include <cstddef>
#include <string>
#include <vector>

#include "fcgan/ops.hpp"
#include "fcgan/params.hpp"
#include "fcgan/ratio.hpp"

namespace fcgan {

inline constexpr std::size_t kImageChannels = 3;
inline constexpr std::size_t kPairChannels = 2 * kImageChannels;

/// Height x width x channels of one feature map.
struct FeatureShape {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;

  std::string str() const {
    return std::to_string(height) + "x" + std::to_string(width) + "x" + std::to_string(channels);
  }
  friend bool operator==(const FeatureShape&, const FeatureShape&) = default;
};

/// Layout of a U-Net style network.
///
/// Encoder stage i halves the resolution and produces `encoder[i]` channels.
/// Decoder stage j doubles it and produces `decoder[j]` channels; for every
/// stage but the last, the result is concatenated with the mirrored encoder
/// output (decoder feature first). The bottleneck feeds decoder stage 0 alone.
/// Channel counts are scaled by `width` except the image channels at either end.
struct NetworkSpec {
  std::string name;
  std::size_t in_channels = 0;
  std::vector<std::size_t> encoder;
  std::vector<std::size_t> decoder;  // last entry is the (unscaled) output channel count
  Ratio width{1, 1};

  std::size_t depth() const { return encoder.size(); }

  std::size_t scaled(std::size_t channels) const {
    const std::uint64_t c = channels * width.num / width.den;
    if (c == 0) {
      fail(ErrorKind::kValue, name + ": width multiplier " + width.str() + " leaves " +
                                  std::to_string(channels) + " channels empty");
    }
    return static_cast<std::size_t>(c);
  }
  std::size_t encoder_channels(std::size_t i) const { return scaled(encoder.at(i)); }
  std::size_t decoder_channels(std::size_t j) const {
    return j + 1 == decoder.size() ? decoder.back() : scaled(decoder.at(j));
  }
  std::size_t out_channels() const { return decoder.back(); }

  /// Channels entering decoder stage j (post-concatenation for j > 0).
  std::size_t decoder_input_channels(std::size_t j) const {
    const std::size_t bottom = depth() - 1;
    return j == 0 ? encoder_channels(bottom) : decoder_channels(j - 1) + encoder_channels(bottom - j);
  }

  void validate() const {
    if (encoder.empty() || encoder.size() != decoder.size()) {
      fail(ErrorKind::kValue, name + ": encoder and decoder need the same non-zero depth");
    }
  }
};

inline NetworkSpec generator_spec(Ratio width = {1, 1}) {
  return {"generator", kImageChannels, {64, 128, 256, 512, 512, 512}, {512, 512, 256, 128, 64, 3}, width};
}

inline NetworkSpec discriminator_spec(Ratio width = {1, 1}) {
  return {"discriminator", kPairChannels, {64, 128, 256, 512, 512}, {512, 256, 128, 64, 6}, width};
}

/// Convolution layers in parameter order: enc1..encL then dec1..decL.
inline std::vector<LayerSpec> network_layers(const NetworkSpec& spec) {
  spec.validate();
  std::vector<LayerSpec> layers;
  std::size_t channels = spec.in_channels;
  for (std::size_t i = 0; i < spec.depth(); ++i) {
    layers.push_back({"enc" + std::to_string(i + 1), LayerKind::kDown, channels, spec.encoder_channels(i)});
    channels = spec.encoder_channels(i);
  }
  for (std::size_t j = 0; j < spec.depth(); ++j) {
    layers.push_back({"dec" + std::to_string(j + 1), LayerKind::kUp, spec.decoder_input_channels(j),
                      spec.decoder_channels(j)});
  }
  return layers;
}

inline std::size_t param_count(const NetworkSpec& spec) {
  std::size_t total = 0;
  for (const auto& layer : network_layers(spec)) total += layer.param_count();
  return total;
}

template <typename T>
ParameterSet<T> init_network(const NetworkSpec& spec, std::uint64_t seed) {
  return init_params<T>(network_layers(spec), seed);
}

/// Feature shapes from input through every encoder output, every
/// post-concatenation decoder feature, to the output. Needs no parameters.
inline std::vector<FeatureShape> shape_trace(const NetworkSpec& spec, FeatureShape input) {
  spec.validate();
  if (input.channels != spec.in_channels) {
    fail(ErrorKind::kShape, spec.name + ": expects " + std::to_string(spec.in_channels) +
                                " input channels, got " + std::to_string(input.channels));
  }
  std::vector<FeatureShape> trace{input};
  std::vector<FeatureShape> skips;
  FeatureShape cur = input;
  for (std::size_t i = 0; i < spec.depth(); ++i) {
    if (cur.height % 2 || cur.width % 2 || cur.height < 2 || cur.width < 2) {
      fail(ErrorKind::kShape, spec.name + ": encoder stage " + std::to_string(i + 1) +
                                  " cannot halve " + cur.str());
    }
    cur = {cur.height / 2, cur.width / 2, spec.encoder_channels(i)};
    skips.push_back(cur);
    trace.push_back(cur);
  }
  for (std::size_t j = 0; j < spec.depth(); ++j) {
    cur = {cur.height * 2, cur.width * 2, spec.decoder_channels(j)};
    if (j + 1 < spec.depth()) cur.channels += skips[spec.depth() - 2 - j].channels;
    trace.push_back(cur);
  }
  return trace;
}

/// Intermediate values of one forward pass, kept for the backward pass.
template <typename T>
struct ForwardTape {
  Tensor<T> input;
  std::vector<Tensor<T>> encoder_pre;  // before activation
  std::vector<Tensor<T>> encoder_out;  // after activation
  std::vector<Tensor<T>> decoder_in;   // post-concatenation input of each decoder stage
  std::vector<Tensor<T>> decoder_pre;
  Tensor<T> output;

  std::vector<FeatureShape> trace() const {
    auto shape_of = [](const Tensor<T>& t) { return FeatureShape{t.h(), t.w(), t.c()}; };
    std::vector<FeatureShape> out{shape_of(input)};
    for (const auto& e : encoder_out) out.push_back(shape_of(e));
    for (std::size_t j = 1; j < decoder_in.size(); ++j) out.push_back(shape_of(decoder_in[j]));
    out.push_back(shape_of(output));
    return out;
  }
};

namespace detail {

inline void check_spatial(const NetworkSpec& spec, std::size_t h, std::size_t w) {
  const std::size_t factor = std::size_t{1} << spec.depth();
  const bool pow2 = h != 0 && (h & (h - 1)) == 0;
  if (h != w || !pow2 || h < factor) {
    fail(ErrorKind::kShape, spec.name + ": spatial size must be square, a power of two and at least " +
                                std::to_string(factor) + ", got " + std::to_string(h) + "x" +
                                std::to_string(w));
  }
}

}  // namespace detail

/// Runs the network. When `tape` is non-null it receives every intermediate
/// needed by network_backward.
template <typename T>
Tensor<T> network_forward(const NetworkSpec& spec, const ParameterSet<T>& params,
                          const Tensor<T>& input, double slope = kDefaultLeakySlope,
                          ForwardTape<T>* tape = nullptr) {
  spec.validate();
  require_rank4(input, (spec.name + " input").c_str());
  if (input.c() != spec.in_channels) {
    fail(ErrorKind::kShape, spec.name + ": expects " + std::to_string(spec.in_channels) +
                                " input channels, got " + std::to_string(input.c()));
  }
  detail::check_spatial(spec, input.h(), input.w());
  const std::size_t depth = spec.depth();

  ForwardTape<T> local;
  ForwardTape<T>& t = tape ? *tape : local;
  t = ForwardTape<T>{};
  t.input = input;

  const Tensor<T>* cur = &t.input;
  for (std::size_t i = 0; i < depth; ++i) {
    const std::string layer = "enc" + std::to_string(i + 1);
    t.encoder_pre.push_back(
        conv2d(*cur, params.get(layer + ".weight").value, params.get(layer + ".bias").value));
    t.encoder_out.push_back(leaky_relu(t.encoder_pre.back(), slope));
    cur = &t.encoder_out.back();
  }
  Tensor<T> out;
  for (std::size_t j = 0; j < depth; ++j) {
    const std::string layer = "dec" + std::to_string(j + 1);
    if (j == 0) {
      t.decoder_in.push_back(t.encoder_out[depth - 1]);
    } else {
      t.decoder_in.push_back(
          concat_channels(leaky_relu(t.decoder_pre.back(), slope), t.encoder_out[depth - 1 - j]));
    }
    t.decoder_pre.push_back(conv_transpose2d(t.decoder_in.back(), params.get(layer + ".weight").value,
                                             params.get(layer + ".bias").value));
  }
  t.output = tanh_activation(t.decoder_pre.back());
  require_finite(t.output, spec.name + " output");
  if (tape) return t.output;
  return std::move(t.output);
}

/// Accumulates dL/dθ into `params[*].grad` given dL/d(output) of a taped
/// forward pass. Returns dL/d(input).
template <typename T>
Tensor<T> network_backward(const NetworkSpec& spec, ParameterSet<T>& params, const ForwardTape<T>& t,
                           const Tensor<T>& grad_output, double slope = kDefaultLeakySlope) {
  const std::size_t depth = spec.depth();
  require_same_shape(grad_output, t.output, "network_backward");

  auto accumulate = [&](const std::string& layer, const ConvGrads<T>& g) {
    auto& w = params.get(layer + ".weight").grad;
    auto& b = params.get(layer + ".bias").grad;
    for (std::size_t i = 0; i < w.size(); ++i) w[i] += g.weight[i];
    for (std::size_t i = 0; i < b.size(); ++i) b[i] += g.bias[i];
  };
  auto add_into = [](Tensor<T>& dst, const Tensor<T>& src) {
    if (dst.empty()) {
      dst = src;
      return;
    }
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  };

  std::vector<Tensor<T>> encoder_grad(depth);
  Tensor<T> grad_pre = tanh_backward(t.output, grad_output);
  for (std::size_t jj = depth; jj-- > 0;) {
    const std::string layer = "dec" + std::to_string(jj + 1);
    ConvGrads<T> g = conv_transpose2d_backward(t.decoder_in[jj], params.get(layer + ".weight").value, grad_pre);
    accumulate(layer, g);
    if (jj == 0) {
      add_into(encoder_grad[depth - 1], g.input);
      break;
    }
    const std::size_t dec_channels = t.decoder_pre[jj - 1].c();
    add_into(encoder_grad[depth - 1 - jj], slice_channels(g.input, dec_channels, g.input.c()));
    grad_pre = leaky_relu_backward(t.decoder_pre[jj - 1], slice_channels(g.input, 0, dec_channels), slope);
  }
  Tensor<T> grad_input;
  for (std::size_t ii = depth; ii-- > 0;) {
    const std::string layer = "enc" + std::to_string(ii + 1);
    const Tensor<T>& layer_in = ii == 0 ? t.input : t.encoder_out[ii - 1];
    ConvGrads<T> g = conv2d_backward(layer_in, params.get(layer + ".weight").value,
                                     leaky_relu_backward(t.encoder_pre[ii], encoder_grad[ii], slope));
    accumulate(layer, g);
    if (ii == 0) {
      grad_input = std::move(g.input);
    } else {
      add_into(encoder_grad[ii - 1], g.input);
    }
  }
  return grad_input;
}

template <typename T>
Tensor<T> generator_forward(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& bhr,
                            double slope = kDefaultLeakySlope, ForwardTape<T>* tape = nullptr) {
  if (bhr.rank() == 4 && bhr.c() != kImageChannels) {
    fail(ErrorKind::kShape, "generator_forward: expects 3 channels, got " + std::to_string(bhr.c()));
  }
  return network_forward(spec, params, bhr, slope, tape);
}

template <typename T>
Tensor<T> discriminator_forward(const NetworkSpec& spec, const ParameterSet<T>& params, const Tensor<T>& pair,
                                double slope = kDefaultLeakySlope, ForwardTape<T>* tape = nullptr) {
  if (pair.rank() == 4 && pair.c() != kPairChannels) {
    fail(ErrorKind::kShape, "discriminator_forward: expects 6 channels, got " + std::to_string(pair.c()));
  }
  return network_forward(spec, params, pair, slope, tape);
}

/// Channels 0-2 hold the condition, 3-5 the candidate.
template <typename T>
Tensor<T> make_pair(const Tensor<T>& condition, const Tensor<T>& candidate) {
  require_same_shape(condition, candidate, "make_pair");
  return concat_channels(condition, candidate);
}

}  // namespace fcgan
