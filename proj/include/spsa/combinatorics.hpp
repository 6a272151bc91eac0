#pragma once

#include <compare>
#include <cstdint>
#include <string>

namespace spsa {

/// Nonnegative fraction in lowest terms.
struct Rational {
  std::uint64_t num = 0;
  std::uint64_t den = 1;

  static Rational make(std::uint64_t num, std::uint64_t den);

  double to_double() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;

  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Largest n for which binomial(n, k) and the rho denominators fit in 64 bits.
inline constexpr unsigned kExactCombinatoricsLimit = 64;

/// Exact C(n, k); throws std::overflow_error for n > 64.
std::uint64_t binomial(unsigned n, unsigned k);

/// log C(n, k) through lgamma, for any n.
double log_binomial(unsigned n, unsigned k);

}  // namespace spsa
