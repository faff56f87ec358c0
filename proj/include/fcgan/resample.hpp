#pragma once

// Bicubic resampling with the Keys cubic convolution kernel (a = -0.5).
//
// Output pixel centre d maps to source coordinate s = (d + 0.5) * in / out - 0.5.
// The four taps floor(s) - 1 .. floor(s) + 2 are clamped to the image edge.
// No anti-aliasing prefilter is applied when shrinking. The two separable
// passes (rows, then columns) accumulate in double and round to float once,
// so a constant image stays exactly constant. Results are not clipped.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "fcgan/image_io.hpp"

namespace fcgan {

inline constexpr double kKeysA = -0.5;

/// Keys cubic convolution kernel.
inline double keys_kernel(double x, double a = kKeysA) {
  x = std::abs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

namespace detail {

struct Taps {
  std::array<std::size_t, 4> index;
  std::array<double, 4> weight;
};

inline std::vector<Taps> resample_taps(std::size_t in, std::size_t out) {
  std::vector<Taps> taps(out);
  const double scale = static_cast<double>(in) / static_cast<double>(out);
  for (std::size_t d = 0; d < out; ++d) {
    const double s = (static_cast<double>(d) + 0.5) * scale - 0.5;
    const double base = std::floor(s);
    for (int k = 0; k < 4; ++k) {
      const double pos = base - 1.0 + k;
      const double clamped = std::clamp(pos, 0.0, static_cast<double>(in - 1));
      taps[d].index[k] = static_cast<std::size_t>(clamped);
      taps[d].weight[k] = keys_kernel(s - pos);
    }
  }
  return taps;
}

}  // namespace detail

/// Resamples every channel of a (C, H, W) image to (C, out_h, out_w).
inline Image bicubic_resample(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (img.rank() != 3 || img.dim(1) == 0 || img.dim(2) == 0) {
    fail(ErrorKind::kShape, "bicubic_resample expects a non-empty (C, H, W) image, got " +
                                shape_string(img.shape()));
  }
  if (out_h == 0 || out_w == 0) fail(ErrorKind::kValue, "bicubic_resample: output size must be >= 1");
  const std::size_t channels = img.dim(0);
  const std::size_t in_h = img.dim(1);
  const std::size_t in_w = img.dim(2);
  const auto col_taps = detail::resample_taps(in_w, out_w);
  const auto row_taps = detail::resample_taps(in_h, out_h);

  std::vector<double> rows(in_h * out_w);
  Image out({channels, out_h, out_w});
  for (std::size_t c = 0; c < channels; ++c) {
    const float* plane = img.data().data() + c * in_h * in_w;
    for (std::size_t y = 0; y < in_h; ++y) {
      for (std::size_t x = 0; x < out_w; ++x) {
        const auto& t = col_taps[x];
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) sum += t.weight[k] * plane[y * in_w + t.index[k]];
        rows[y * out_w + x] = sum;
      }
    }
    float* dst = out.data().data() + c * out_h * out_w;
    for (std::size_t y = 0; y < out_h; ++y) {
      const auto& t = row_taps[y];
      for (std::size_t x = 0; x < out_w; ++x) {
        double sum = 0.0;
        for (int k = 0; k < 4; ++k) sum += t.weight[k] * rows[t.index[k] * out_w + x];
        dst[y * out_w + x] = static_cast<float>(sum);
      }
    }
  }
  return out;
}

/// Largest centred square crop followed by a bicubic resize to side x side.
inline Image center_crop_resize(const Image& img, std::size_t side) {
  if (img.rank() != 3 || img.dim(1) == 0 || img.dim(2) == 0) {
    fail(ErrorKind::kShape, "center_crop_resize expects a non-empty (C, H, W) image, got " +
                                shape_string(img.shape()));
  }
  const std::size_t channels = img.dim(0);
  const std::size_t h = img.dim(1);
  const std::size_t w = img.dim(2);
  const std::size_t crop = std::min(h, w);
  const std::size_t top = (h - crop) / 2;
  const std::size_t left = (w - crop) / 2;
  Image square({channels, crop, crop});
  for (std::size_t c = 0; c < channels; ++c) {
    for (std::size_t y = 0; y < crop; ++y) {
      std::copy_n(img.data().begin() + (c * h + top + y) * w + left, crop,
                  square.data().begin() + (c * crop + y) * crop);
    }
  }
  if (crop == side) return square;
  return bicubic_resample(square, side, side);
}

}  // namespace fcgan
