#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <stdexcept>
#include <string>

#include "erm/cloud.hpp"
#include "erm/decay_matrix.hpp"
#include "erm/random.hpp"

namespace erm {

/// Closed-form <S_ij^m> over Gaussian pairs for m = 1, 2, 3.
inline double entry_moment_exact(int m, double mode_count) {
  if (!(mode_count > 0.0)) throw std::invalid_argument("entry_moment_exact: M must be > 0");
  const double M = mode_count;
  switch (m) {
    case 1:
      return std::exp(-M);
    case 2:
      return -std::expm1(-4.0 * M) / (4.0 * M);
    case 3: {
      const double sm = std::sqrt(M);
      // sin^3 x = (3 sin x - sin 3x) / 4 reduces the integral to error functions.
      return std::sqrt(std::numbers::pi) / 2.0 *
             (2.0 - 3.0 * std::erfc(sm) + std::erfc(3.0 * sm)) / (8.0 * M * sm);
    }
    default:
      throw std::invalid_argument("entry_moment_exact: m must be 1, 2 or 3 (got " +
                                  std::to_string(m) + ")");
  }
}

/// a_m in <S_ij^m> ~ a_m M^{-3/2} for large M, m >= 3.
inline double entry_moment_asymptotic_coefficient(int m) {
  if (m < 3) throw std::invalid_argument("entry_moment_asymptotic_coefficient: m must be >= 3");
  double sum = 0.0;
  double binom = 1.0; // C(m, k)
  for (int k = 0; k <= m / 2; ++k) {
    const double sign = (k % 2 == 0) ? -1.0 : 1.0; // (-1)^{k+1}
    sum += sign * binom * std::pow(static_cast<double>(m - 2 * k), m - 3);
    binom = binom * (m - k) / (k + 1);
  }
  return std::sqrt(std::numbers::pi) * sum /
         (std::ldexp(1.0, m + 1) * std::tgamma(static_cast<double>(m - 2)));
}

/// <S_ij S_il> for distinct i, j, l.
inline double correlated_entry_moment(double mode_count) {
  if (!(mode_count > 0.0)) throw std::invalid_argument("correlated_entry_moment: M must be > 0");
  const double M = mode_count;
  // e^{-2M} sinh(M) / M = (e^{-M} - e^{-3M}) / (2M); the expm1 form keeps
  // precision as M -> 0.
  return -std::exp(-M) * std::expm1(-2.0 * M) / (2.0 * M);
}

enum class EntryProduct {
  single,        // S_ij^m
  shared_vertex, // S_ij S_il
  four_cycle,    // S_ij S_jk S_kl S_li
};

struct MonteCarloEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t samples = 0;
};

/// Sample mean and standard error of the requested entry product over freshly
/// drawn Gaussian points. `power` is only used for EntryProduct::single.
inline MonteCarloEstimate monte_carlo_entry_moment(EntryProduct kind, double mode_count,
                                                   std::size_t samples, std::uint64_t seed,
                                                   int power = 1) {
  if (!(mode_count > 0.0)) throw std::invalid_argument("monte_carlo_entry_moment: M must be > 0");
  if (samples < 1000) throw std::invalid_argument("monte_carlo_entry_moment: need >= 1000 samples");
  if (kind == EntryProduct::single && power < 1)
    throw std::invalid_argument("monte_carlo_entry_moment: power must be >= 1");

  const double k = std::sqrt(mode_count);
  auto s = [k](const Point3& a, const Point3& b) { return sinc(k * distance(a, b)); };

  Xoshiro256 gen(seed);
  // Welford accumulation
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t n = 1; n <= samples; ++n) {
    double value = 0.0;
    switch (kind) {
      case EntryProduct::single: {
        const auto a = gaussian_point(gen);
        const auto b = gaussian_point(gen);
        value = std::pow(s(a, b), power);
        break;
      }
      case EntryProduct::shared_vertex: {
        const auto i = gaussian_point(gen);
        const auto j = gaussian_point(gen);
        const auto l = gaussian_point(gen);
        value = s(i, j) * s(i, l);
        break;
      }
      case EntryProduct::four_cycle: {
        const auto i = gaussian_point(gen);
        const auto j = gaussian_point(gen);
        const auto kk = gaussian_point(gen);
        const auto l = gaussian_point(gen);
        value = s(i, j) * s(j, kk) * s(kk, l) * s(l, i);
        break;
      }
    }
    const double delta = value - mean;
    mean += delta / static_cast<double>(n);
    m2 += delta * (value - mean);
  }
  const double var = m2 / static_cast<double>(samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(samples)), samples};
}

} // namespace erm
