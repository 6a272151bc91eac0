#include "spsa/combinatorics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/format.h>

namespace spsa {

Rational Rational::make(std::uint64_t num, std::uint64_t den) {
  if (den == 0) throw std::domain_error("rational with zero denominator");
  const auto g = std::gcd(num, den);
  return {num / g, den / g};
}

std::string Rational::str() const { return fmt::format("{}/{}", num, den); }

std::uint64_t binomial(unsigned n, unsigned k) {
  if (n > kExactCombinatoricsLimit) {
    throw std::overflow_error(fmt::format("exact binomial limited to n <= {}", kExactCombinatoricsLimit));
  }
  if (k > n) return 0;
  k = std::min(k, n - k);
  unsigned __int128 acc = 1;
  for (unsigned i = 1; i <= k; ++i) {
    // acc * (n - k + i) is divisible by i because acc = C(n - k + i - 1, i - 1).
    acc = acc * (n - k + i) / i;
  }
  return static_cast<std::uint64_t>(acc);
}

double log_binomial(unsigned n, unsigned k) {
  if (k > n) return -INFINITY;
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace spsa
