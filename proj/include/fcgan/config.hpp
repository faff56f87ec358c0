#pragma once

// Training configuration and its `key = value` text format.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "fcgan/adam.hpp"
#include "fcgan/data.hpp"
#include "fcgan/loss.hpp"
#include "fcgan/ratio.hpp"

namespace fcgan {

struct TrainConfig {
  double learning_rate = 1e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::size_t batch_size = 16;
  double gamma = kDefaultGamma;
  double lambda_k = kDefaultLambdaK;
  Ratio width_multiplier{1, 1};
  std::int64_t max_steps = 1000;
  std::int64_t checkpoint_every = 0;  // 0 disables periodic checkpoints
  std::uint64_t seed = 0;
  std::size_t image_size = kDefaultImageSize;
  double leaky_slope = kDefaultLeakySlope;
  std::filesystem::path corpus_dir;
  std::filesystem::path manifest;
  std::filesystem::path output_dir = "run";

  AdamConfig adam() const { return {learning_rate, adam_beta1, adam_beta2, adam_eps}; }

  void validate() const {
    auto positive = [](double v, const char* key) {
      if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorKind::kValue, std::string(key) + " must be positive");
    };
    positive(learning_rate, "learning_rate");
    positive(adam_eps, "adam_eps");
    if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0)) fail(ErrorKind::kValue, "adam_beta1 must lie in [0, 1)");
    if (!(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) fail(ErrorKind::kValue, "adam_beta2 must lie in [0, 1)");
    if (batch_size < 1) fail(ErrorKind::kValue, "batch_size must be >= 1");
    if (max_steps < 0 || checkpoint_every < 0) fail(ErrorKind::kValue, "max_steps and checkpoint_every must be >= 0");
    if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) fail(ErrorKind::kValue, "leaky_slope must lie in (0, 1)");
    if (width_multiplier.num == 0) fail(ErrorKind::kValue, "width_multiplier must be positive");
    EquilibriumState{0.0, gamma, lambda_k, 0}.validate();
  }
};

namespace detail {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline double parse_double(const std::string& key, const std::string& value) {
  std::size_t used = 0;
  double out = 0.0;
  try {
    out = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != value.size()) fail(ErrorKind::kFormat, "config key '" + key + "': not a number: '" + value + "'");
  return out;
}

inline std::uint64_t parse_unsigned(const std::string& key, const std::string& value) {
  if (value.empty() || value.find_first_not_of("0123456789") != std::string::npos) {
    fail(ErrorKind::kFormat, "config key '" + key + "': not a non-negative integer: '" + value + "'");
  }
  return std::stoull(value);
}

}  // namespace detail

/// Parses `key = value` lines; blank lines and `#` comments are skipped.
/// Relative paths are resolved against `base_dir`.
inline TrainConfig parse_config(std::istream& in, const std::filesystem::path& base_dir = {}) {
  TrainConfig c;
  std::string line;
  std::size_t line_no = 0;
  auto resolve = [&](const std::string& v) {
    std::filesystem::path p(v);
    return p.is_relative() && !base_dir.empty() ? (base_dir / p).lexically_normal() : p;
  };
  while (std::getline(in, line)) {
    ++line_no;
    const std::string text = detail::trim(line.substr(0, line.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) fail(ErrorKind::kFormat, "config line " + std::to_string(line_no) + ": expected 'key = value'");
    const std::string key = detail::trim(text.substr(0, eq));
    const std::string value = detail::trim(text.substr(eq + 1));
    if (key == "learning_rate") c.learning_rate = detail::parse_double(key, value);
    else if (key == "adam_beta1") c.adam_beta1 = detail::parse_double(key, value);
    else if (key == "adam_beta2") c.adam_beta2 = detail::parse_double(key, value);
    else if (key == "adam_eps") c.adam_eps = detail::parse_double(key, value);
    else if (key == "batch_size") c.batch_size = detail::parse_unsigned(key, value);
    else if (key == "gamma") c.gamma = detail::parse_double(key, value);
    else if (key == "lambda_k") c.lambda_k = detail::parse_double(key, value);
    else if (key == "width_multiplier") c.width_multiplier = parse_ratio(value);
    else if (key == "max_steps") c.max_steps = static_cast<std::int64_t>(detail::parse_unsigned(key, value));
    else if (key == "checkpoint_every") c.checkpoint_every = static_cast<std::int64_t>(detail::parse_unsigned(key, value));
    else if (key == "seed") c.seed = detail::parse_unsigned(key, value);
    else if (key == "image_size") c.image_size = detail::parse_unsigned(key, value);
    else if (key == "leaky_slope") c.leaky_slope = detail::parse_double(key, value);
    else if (key == "corpus_dir") c.corpus_dir = resolve(value);
    else if (key == "manifest") c.manifest = resolve(value);
    else if (key == "output_dir") c.output_dir = resolve(value);
    else fail(ErrorKind::kFormat, "config line " + std::to_string(line_no) + ": unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

inline TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kIo, "cannot open config " + path.string());
  return parse_config(in, std::filesystem::absolute(path).parent_path());
}

inline std::string format_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "learning_rate = " << detail::format_double(c.learning_rate) << '\n'
      << "adam_beta1 = " << detail::format_double(c.adam_beta1) << '\n'
      << "adam_beta2 = " << detail::format_double(c.adam_beta2) << '\n'
      << "adam_eps = " << detail::format_double(c.adam_eps) << '\n'
      << "batch_size = " << c.batch_size << '\n'
      << "gamma = " << detail::format_double(c.gamma) << '\n'
      << "lambda_k = " << detail::format_double(c.lambda_k) << '\n'
      << "width_multiplier = " << c.width_multiplier.str() << '\n'
      << "max_steps = " << c.max_steps << '\n'
      << "checkpoint_every = " << c.checkpoint_every << '\n'
      << "seed = " << c.seed << '\n'
      << "image_size = " << c.image_size << '\n'
      << "leaky_slope = " << detail::format_double(c.leaky_slope) << '\n'
      << "corpus_dir = " << c.corpus_dir.string() << '\n'
      << "manifest = " << c.manifest.string() << '\n'
      << "output_dir = " << c.output_dir.string() << '\n';
  return out.str();
}

}  // namespace fcgan
