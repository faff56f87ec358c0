#pragma once

// PNG/JPEG decoding and PNG encoding of (3, H, W) tensors in [0, 1].

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fcgan/tensor.hpp"

namespace fcgan {

using Image = Tensor<float>;  // (3, H, W), RGB

inline constexpr std::size_t kRgb = 3;

inline bool is_image_file(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

inline std::uint8_t to_byte(float v) {
  const float clamped = std::clamp(v, 0.0f, 1.0f);
  return static_cast<std::uint8_t>(std::lround(clamped * 255.0f));
}

inline float from_byte(std::uint8_t b) { return static_cast<float>(b) / 255.0f; }

/// Snaps values onto the 8-bit grid that a PNG round trip produces.
inline Image quantize(const Image& img) {
  Image out = img;
  for (float& v : out.data()) v = from_byte(to_byte(v));
  return out;
}

/// Reads a PNG or JPEG as RGB in [0, 1]. Grayscale is replicated to three
/// channels; alpha is dropped.
inline Image decode_image(const std::filesystem::path& path) {
  if (!std::filesystem::is_regular_file(path)) {
    fail(ErrorKind::kIo, "no such image file: " + path.string());
  }
  if (!is_image_file(path)) {
    fail(ErrorKind::kIo, "unsupported image format (expected PNG or JPEG): " + path.string());
  }
  const cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty() || bgr.type() != CV_8UC3) {
    fail(ErrorKind::kIo, "cannot decode image: " + path.string());
  }
  const auto h = static_cast<std::size_t>(bgr.rows);
  const auto w = static_cast<std::size_t>(bgr.cols);
  Image img({kRgb, h, w});
  for (std::size_t y = 0; y < h; ++y) {
    const auto* row = bgr.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < kRgb; ++c) {
        img[(c * h + y) * w + x] = from_byte(row[x * 3 + (2 - c)]);
      }
    }
  }
  return img;
}

/// Writes a (3, H, W) tensor as 8-bit PNG after clamping to [0, 1].
inline void encode_png(const Image& img, const std::filesystem::path& path) {
  if (img.rank() != 3 || img.dim(0) != kRgb) {
    fail(ErrorKind::kShape, "encode_png expects (3, H, W), got " + shape_string(img.shape()));
  }
  const std::size_t h = img.dim(1);
  const std::size_t w = img.dim(2);
  cv::Mat bgr(static_cast<int>(h), static_cast<int>(w), CV_8UC3);
  for (std::size_t y = 0; y < h; ++y) {
    auto* row = bgr.ptr<std::uint8_t>(static_cast<int>(y));
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < kRgb; ++c) row[x * 3 + (2 - c)] = to_byte(img[(c * h + y) * w + x]);
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  bool ok = false;
  try {
    ok = cv::imwrite(path.string(), bgr, {cv::IMWRITE_PNG_COMPRESSION, 6});
  } catch (const cv::Exception& e) {
    fail(ErrorKind::kIo, "cannot write " + path.string() + ": " + e.what());
  }
  if (!ok) fail(ErrorKind::kIo, "cannot write " + path.string());
}

}  // namespace fcgan
