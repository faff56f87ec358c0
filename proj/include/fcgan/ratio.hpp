#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "fcgan/error.hpp"

namespace fcgan {

/// Non-negative rational number, always stored in lowest terms.
struct Ratio {
  std::uint64_t num = 1;
  std::uint64_t den = 1;

  constexpr Ratio() = default;
  Ratio(std::uint64_t n, std::uint64_t d) : num(n), den(d) {
    if (d == 0) fail(ErrorKind::kValue, "ratio with zero denominator");
    const std::uint64_t g = std::gcd(n, d);
    if (g > 1) {
      num /= g;
      den /= g;
    }
  }

  double to_double() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const { return den == 1 ? std::to_string(num) : std::to_string(num) + "/" + std::to_string(den); }

  friend bool operator==(const Ratio&, const Ratio&) = default;
};

/// Accepts "a/b", an integer, or a plain decimal such as "0.05" (converted exactly).
inline Ratio parse_ratio(const std::string& text) {
  auto digits = [&](const std::string& s) {
    if (s.empty() || s.size() > 18 || s.find_first_not_of("0123456789") != std::string::npos) {
      fail(ErrorKind::kFormat, "cannot parse '" + text + "' as a non-negative rational");
    }
    return static_cast<std::uint64_t>(std::stoull(s));
  };
  if (const auto slash = text.find('/'); slash != std::string::npos) {
    return Ratio(digits(text.substr(0, slash)), digits(text.substr(slash + 1)));
  }
  if (const auto dot = text.find('.'); dot != std::string::npos) {
    const std::string whole = text.substr(0, dot);
    const std::string frac = text.substr(dot + 1);
    std::uint64_t scale = 1;
    for (std::size_t i = 0; i < frac.size(); ++i) scale *= 10;
    const std::uint64_t w = whole.empty() ? 0 : digits(whole);
    const std::uint64_t f = frac.empty() ? 0 : digits(frac);
    return Ratio(w * scale + f, scale);
  }
  return Ratio(digits(text), 1);
}

}  // namespace fcgan
