#pragma once

// Layer primitives used by the generator and discriminator, each with its
// hand-written backward pass. Convolutions lower to im2col + GEMM.

#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <string>

#include "fcgan/tensor.hpp"

namespace fcgan {

inline constexpr std::size_t kKernel = 4;
inline constexpr std::size_t kStride = 2;
inline constexpr std::size_t kPadding = 1;
inline constexpr double kDefaultLeakySlope = 0.2;

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

namespace detail {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

/// Geometry of one strided window sweep over a (channels, height, width) image.
struct Window {
  std::size_t channels, height, width;  // the larger (unstrided) image
  std::size_t out_h, out_w;             // window grid
  std::size_t stride, padding;

  std::size_t rows() const { return channels * kKernel * kKernel; }
  std::size_t cols() const { return out_h * out_w; }
};

inline std::size_t strided_extent(std::size_t extent, std::size_t padding, std::size_t stride,
                                  const char* axis) {
  const std::size_t padded = extent + 2 * padding;
  if (padded < kKernel || (padded - kKernel) % stride != 0) {
    fail(ErrorKind::kShape, std::string("conv2d: ") + axis + " = " + std::to_string(extent) +
                                " does not tile exactly with kernel 4, stride " +
                                std::to_string(stride) + ", padding " + std::to_string(padding));
  }
  return (padded - kKernel) / stride + 1;
}

// cols[(c*16 + ky*4 + kx), (oy*out_w + ox)] = image[c, oy*s - p + ky, ox*s - p + kx]
template <typename T>
void im2col(const T* image, const Window& g, T* cols) {
  const std::size_t n_cols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    const T* plane = image + c * g.height * g.width;
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        T* row = cols + ((c * kKernel + ky) * kKernel + kx) * n_cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          T* dst = row + oy * g.out_w;
          if (iy < 0 || iy >= static_cast<long>(g.height)) {
            std::fill(dst, dst + g.out_w, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(iy) * g.width;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            dst[ox] = (ix < 0 || ix >= static_cast<long>(g.width)) ? T{0}
                                                                   : src[static_cast<std::size_t>(ix)];
          }
        }
      }
    }
  }
}

// Adjoint of im2col: scatter-add columns back into a zeroed image.
template <typename T>
void col2im(const T* cols, const Window& g, T* image) {
  std::fill(image, image + g.channels * g.height * g.width, T{0});
  const std::size_t n_cols = g.cols();
  for (std::size_t c = 0; c < g.channels; ++c) {
    T* plane = image + c * g.height * g.width;
    for (std::size_t ky = 0; ky < kKernel; ++ky) {
      for (std::size_t kx = 0; kx < kKernel; ++kx) {
        const T* row = cols + ((c * kKernel + ky) * kKernel + kx) * n_cols;
        for (std::size_t oy = 0; oy < g.out_h; ++oy) {
          const long iy = static_cast<long>(oy * g.stride + ky) - static_cast<long>(g.padding);
          if (iy < 0 || iy >= static_cast<long>(g.height)) continue;
          T* dst = plane + static_cast<std::size_t>(iy) * g.width;
          const T* src = row + oy * g.out_w;
          for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const long ix = static_cast<long>(ox * g.stride + kx) - static_cast<long>(g.padding);
            if (ix >= 0 && ix < static_cast<long>(g.width)) dst[ix] += src[ox];
          }
        }
      }
    }
  }
}

template <typename T>
void check_weight(const Tensor<T>& weight, const char* op) {
  if (weight.rank() != 4 || weight.dim(2) != kKernel || weight.dim(3) != kKernel) {
    fail(ErrorKind::kShape, std::string(op) + ": weight must be [*, *, 4, 4], got " +
                                shape_string(weight.shape()));
  }
}

template <typename T>
void check_bias(const Tensor<T>& bias, std::size_t channels, const char* op) {
  if (bias.rank() != 1 || bias.dim(0) != channels) {
    fail(ErrorKind::kShape, std::string(op) + ": bias must be [" + std::to_string(channels) +
                                "], got " + shape_string(bias.shape()));
  }
}

template <typename T>
void check_channels(std::size_t got, std::size_t expected, const char* op, const char* which) {
  if (got != expected) {
    fail(ErrorKind::kShape, std::string(op) + ": " + which + " channel dimension is " +
                                std::to_string(got) + " but the weight expects " +
                                std::to_string(expected));
  }
}

}  // namespace detail

/// Strided cross-correlation with a 4x4 kernel over a zero-padded input.
/// `weight` is [Cout, Cin, 4, 4]; with the defaults the spatial size halves.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 std::size_t padding = kPadding, std::size_t stride = kStride) {
  require_rank4(input, "conv2d input");
  detail::check_weight(weight, "conv2d");
  detail::check_channels<T>(input.c(), weight.dim(1), "conv2d", "input");
  const std::size_t c_out = weight.dim(0);
  detail::check_bias(bias, c_out, "conv2d");
  if (stride == 0) fail(ErrorKind::kValue, "conv2d: stride must be positive");
  if (padding == kPadding && stride == kStride && (input.h() % 2 || input.w() % 2)) {
    fail(ErrorKind::kShape, "conv2d: height and width must be even, got " +
                                shape_string(input.shape()));
  }
  const detail::Window g{input.c(),
                         input.h(),
                         input.w(),
                         detail::strided_extent(input.h(), padding, stride, "height"),
                         detail::strided_extent(input.w(), padding, stride, "width"),
                         stride,
                         padding};

  Tensor<T> out({input.n(), c_out, g.out_h, g.out_w});
  AlignedVector<T> cols(g.rows() * g.cols());
  const detail::ConstMatrixMap<T> w(weight.data().data(), c_out, g.rows());
  const Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, 1>> b(bias.data().data(), c_out);
  const std::size_t in_plane = g.channels * g.height * g.width;
  for (std::size_t n = 0; n < input.n(); ++n) {
    detail::im2col(input.data().data() + n * in_plane, g, cols.data());
    detail::MatrixMap<T> y(out.data().data() + n * c_out * g.cols(), c_out, g.cols());
    y.noalias() = w * detail::ConstMatrixMap<T>(cols.data(), g.rows(), g.cols());
    y.colwise() += b;
  }
  return out;
}

/// Gradients of conv2d with respect to input, weight and bias given dL/d(output).
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                             const Tensor<T>& grad_out, std::size_t padding = kPadding,
                             std::size_t stride = kStride) {
  const std::size_t c_out = weight.dim(0);
  const detail::Window g{input.c(), input.h(), input.w(), grad_out.h(), grad_out.w(), stride,
                         padding};
  ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({c_out})};
  AlignedVector<T> cols(g.rows() * g.cols());
  const detail::ConstMatrixMap<T> w(weight.data().data(), c_out, g.rows());
  detail::MatrixMap<T> dw(grads.weight.data().data(), c_out, g.rows());
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> db(grads.bias.data().data(), c_out);
  const std::size_t in_plane = g.channels * g.height * g.width;
  for (std::size_t n = 0; n < input.n(); ++n) {
    const detail::ConstMatrixMap<T> dy(grad_out.data().data() + n * c_out * g.cols(), c_out,
                                       g.cols());
    detail::im2col(input.data().data() + n * in_plane, g, cols.data());
    dw.noalias() += dy * detail::ConstMatrixMap<T>(cols.data(), g.rows(), g.cols()).transpose();
    db += dy.rowwise().sum();
    detail::MatrixMap<T>(cols.data(), g.rows(), g.cols()).noalias() = w.transpose() * dy;
    detail::col2im(cols.data(), g, grads.input.data().data() + n * in_plane);
  }
  return grads;
}

/// Transposed convolution, the exact adjoint of conv2d (kernel 4, stride 2,
/// padding 1). `weight` is [Cin, Cout, 4, 4]; the spatial size doubles.
template <typename T>
Tensor<T> conv_transpose2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  require_rank4(input, "conv_transpose2d input");
  detail::check_weight(weight, "conv_transpose2d");
  detail::check_channels<T>(input.c(), weight.dim(0), "conv_transpose2d", "input");
  const std::size_t c_in = weight.dim(0);
  const std::size_t c_out = weight.dim(1);
  detail::check_bias(bias, c_out, "conv_transpose2d");
  const detail::Window g{c_out,       2 * input.h(), 2 * input.w(), input.h(),
                         input.w(),   kStride,       kPadding};

  Tensor<T> out({input.n(), c_out, g.height, g.width});
  AlignedVector<T> cols(g.rows() * g.cols());
  const detail::ConstMatrixMap<T> w(weight.data().data(), c_in, g.rows());
  const std::size_t out_plane = c_out * g.height * g.width;
  const std::size_t spatial = g.height * g.width;
  for (std::size_t n = 0; n < input.n(); ++n) {
    const detail::ConstMatrixMap<T> x(input.data().data() + n * c_in * g.cols(), c_in, g.cols());
    detail::MatrixMap<T>(cols.data(), g.rows(), g.cols()).noalias() = w.transpose() * x;
    T* y = out.data().data() + n * out_plane;
    detail::col2im(cols.data(), g, y);
    for (std::size_t c = 0; c < c_out; ++c) {
      const T bc = bias[c];
      for (std::size_t i = 0; i < spatial; ++i) y[c * spatial + i] += bc;
    }
  }
  return out;
}

template <typename T>
ConvGrads<T> conv_transpose2d_backward(const Tensor<T>& input, const Tensor<T>& weight,
                                       const Tensor<T>& grad_out) {
  const std::size_t c_in = weight.dim(0);
  const std::size_t c_out = weight.dim(1);
  const detail::Window g{c_out, grad_out.h(), grad_out.w(), input.h(), input.w(),
                         kStride, kPadding};
  ConvGrads<T> grads{Tensor<T>(input.shape()), Tensor<T>(weight.shape()), Tensor<T>({c_out})};
  AlignedVector<T> cols(g.rows() * g.cols());
  const detail::ConstMatrixMap<T> w(weight.data().data(), c_in, g.rows());
  detail::MatrixMap<T> dw(grads.weight.data().data(), c_in, g.rows());
  const std::size_t out_plane = c_out * g.height * g.width;
  const std::size_t spatial = g.height * g.width;
  for (std::size_t n = 0; n < input.n(); ++n) {
    const T* dy = grad_out.data().data() + n * out_plane;
    for (std::size_t c = 0; c < c_out; ++c) {
      T sum = 0;
      for (std::size_t i = 0; i < spatial; ++i) sum += dy[c * spatial + i];
      grads.bias[c] += sum;
    }
    detail::im2col(dy, g, cols.data());
    const detail::ConstMatrixMap<T> gathered(cols.data(), g.rows(), g.cols());
    const detail::ConstMatrixMap<T> x(input.data().data() + n * c_in * g.cols(), c_in, g.cols());
    dw.noalias() += x * gathered.transpose();
    detail::MatrixMap<T>(grads.input.data().data() + n * c_in * g.cols(), c_in, g.cols())
        .noalias() = w * gathered;
  }
  return grads;
}

template <typename T>
Tensor<T> leaky_relu(const Tensor<T>& input, double slope) {
  if (!(slope > 0.0 && slope < 1.0)) {
    fail(ErrorKind::kValue, "leaky_relu: slope must lie in (0, 1), got " + std::to_string(slope));
  }
  Tensor<T> out = input;
  const T s = static_cast<T>(slope);
  for (T& v : out.data()) {
    if (!std::isfinite(v)) fail(ErrorKind::kNonFinite, "leaky_relu: non-finite input");
    if (v < T{0}) v *= s;
  }
  return out;
}

/// Backward of leaky_relu given its pre-activation input.
template <typename T>
Tensor<T> leaky_relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out, double slope) {
  Tensor<T> grad = grad_out;
  const T s = static_cast<T>(slope);
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (input[i] < T{0}) grad[i] *= s;
  }
  return grad;
}

template <typename T>
Tensor<T> tanh_activation(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.data()) v = std::tanh(v);
  return out;
}

/// Backward of tanh given its output.
template <typename T>
Tensor<T> tanh_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
  Tensor<T> grad = grad_out;
  for (std::size_t i = 0; i < grad.size(); ++i) grad[i] *= T{1} - output[i] * output[i];
  return grad;
}

/// Channel concatenation: `a` fills channels [0, Ca), `b` fills [Ca, Ca + Cb).
template <typename T>
Tensor<T> concat_channels(const Tensor<T>& a, const Tensor<T>& b) {
  require_rank4(a, "concat_channels lhs");
  require_rank4(b, "concat_channels rhs");
  const char* names[] = {"batch", "channels", "height", "width"};
  for (std::size_t axis : {0u, 2u, 3u}) {
    if (a.dim(axis) != b.dim(axis)) {
      fail(ErrorKind::kShape, std::string("concat_channels: ") + names[axis] + " differs (" +
                                  std::to_string(a.dim(axis)) + " vs " +
                                  std::to_string(b.dim(axis)) + ")");
    }
  }
  const std::size_t plane = a.h() * a.w();
  const std::size_t a_block = a.c() * plane;
  const std::size_t b_block = b.c() * plane;
  Tensor<T> out({a.n(), a.c() + b.c(), a.h(), a.w()});
  for (std::size_t n = 0; n < a.n(); ++n) {
    auto dst = out.data().begin() + n * (a_block + b_block);
    std::copy_n(a.data().begin() + n * a_block, a_block, dst);
    std::copy_n(b.data().begin() + n * b_block, b_block, dst + a_block);
  }
  return out;
}

/// Channels [begin, end) of a rank-4 tensor.
template <typename T>
Tensor<T> slice_channels(const Tensor<T>& t, std::size_t begin, std::size_t end) {
  require_rank4(t, "slice_channels input");
  if (begin > end || end > t.c()) {
    fail(ErrorKind::kShape, "slice_channels: range [" + std::to_string(begin) + ", " +
                                std::to_string(end) + ") outside " + std::to_string(t.c()) +
                                " channels");
  }
  const std::size_t plane = t.h() * t.w();
  Tensor<T> out({t.n(), end - begin, t.h(), t.w()});
  for (std::size_t n = 0; n < t.n(); ++n) {
    std::copy_n(t.data().begin() + (n * t.c() + begin) * plane, (end - begin) * plane,
                out.data().begin() + n * (end - begin) * plane);
  }
  return out;
}

/// Mean absolute difference over all elements, accumulated in double.
template <typename T>
double l1_mean(const Tensor<T>& a, const Tensor<T>& b) {
  require_same_shape(a, b, "l1_mean");
  if (a.empty()) fail(ErrorKind::kShape, "l1_mean: empty tensors");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sum += std::abs(static_cast<double>(a[i]) - static_cast<double>(b[i]));
  }
  return sum / static_cast<double>(a.size());
}

/// d l1_mean(a, b) / d a, scaled by `scale`. The derivative of |u| at u = 0 is 0.
/// The gradient with respect to b is the negation.
template <typename T>
Tensor<T> l1_mean_grad(const Tensor<T>& a, const Tensor<T>& b, double scale = 1.0) {
  require_same_shape(a, b, "l1_mean_grad");
  const T unit = static_cast<T>(scale / static_cast<double>(a.size()));
  Tensor<T> grad(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad[i] = a[i] > b[i] ? unit : (a[i] < b[i] ? -unit : T{0});
  }
  return grad;
}

}  // namespace fcgan
