#pragma once

#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "fcgan/data.hpp"
#include "fcgan/image_io.hpp"

namespace fcgan {

/// PSNR in dB of two [0, 1] images over all channels jointly (peak 1).
/// Inputs are clamped first; identical images give +infinity.
inline double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  if (a.empty()) fail(ErrorKind::kShape, "psnr: empty images");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(std::clamp(a[i], 0.0f, 1.0f)) - std::clamp(b[i], 0.0f, 1.0f);
    sum += d * d;
  }
  const double mse = sum / static_cast<double>(a.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

/// Compensated mean of per-image PSNR values; any infinite entry makes the mean infinite.
inline double mean_psnr(const std::vector<double>& values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  double sum = 0.0, carry = 0.0;
  for (double v : values) {
    if (std::isinf(v)) return std::numeric_limits<double>::infinity();
    const double t = sum + v;
    carry += std::abs(sum) >= std::abs(v) ? (sum - t) + v : (v - t) + sum;
    sum = t;
  }
  return (sum + carry) / static_cast<double>(values.size());
}

/// "inf" for the identical-image sentinel, otherwise fixed 4 decimals.
inline std::string format_psnr(double db) {
  if (std::isinf(db)) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", db);
  return buf;
}

inline constexpr std::size_t kGridSeparator = 2;

/// One row per record with columns LR (nearest-neighbour upscaled), BHR,
/// generated and HR, separated by 2-pixel white bars. `generated` holds
/// normalized (3, S, S) images aligned with `records`.
inline Image render_grid(const std::vector<PairRecord>& records, const std::vector<Image>& generated) {
  if (records.empty()) fail(ErrorKind::kValue, "emit_grid: no records");
  if (records.size() != generated.size()) fail(ErrorKind::kValue, "emit_grid: records and generated images differ in count");
  const std::size_t side = records.front().hr.dim(1);
  const std::size_t cols = 4;
  const std::size_t width = cols * side + (cols - 1) * kGridSeparator;
  const std::size_t height = records.size() * side + (records.size() - 1) * kGridSeparator;
  Image grid({kRgb, height, width}, 1.0f);
  auto blit = [&](const Image& tile01, std::size_t row, std::size_t col) {
    const std::size_t th = tile01.dim(1), tw = tile01.dim(2);
    const std::size_t y0 = row * (side + kGridSeparator);
    const std::size_t x0 = col * (side + kGridSeparator);
    for (std::size_t c = 0; c < kRgb; ++c) {
      for (std::size_t y = 0; y < side; ++y) {
        for (std::size_t x = 0; x < side; ++x) {
          const std::size_t sy = y * th / side, sx = x * tw / side;
          grid[(c * height + y0 + y) * width + x0 + x] = tile01[(c * th + sy) * tw + sx];
        }
      }
    }
  };
  for (std::size_t r = 0; r < records.size(); ++r) {
    if (records[r].hr.dim(1) != side || generated[r].shape() != records[r].hr.shape()) {
      fail(ErrorKind::kShape, "emit_grid: record '" + records[r].id + "' does not match the grid tile size");
    }
    blit(denormalize(records[r].lr), r, 0);
    blit(denormalize(records[r].bhr), r, 1);
    blit(denormalize(generated[r]), r, 2);
    blit(denormalize(records[r].hr), r, 3);
  }
  return grid;
}

inline void emit_grid(const std::vector<PairRecord>& records, const std::vector<Image>& generated,
                      const std::filesystem::path& path) {
  encode_png(render_grid(records, generated), path);
}

}  // namespace fcgan
