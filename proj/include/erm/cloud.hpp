#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "erm/random.hpp"

namespace erm {

using Point3 = std::array<double, 3>;

/// Atomic positions in units of the cloud width sigma, drawn i.i.d. from the
/// three-dimensional standard Gaussian.
struct CloudSample {
  std::vector<Point3> points;
  std::size_t n_atoms = 0;
  std::uint64_t seed = 0;
};

inline double distance(const Point3& a, const Point3& b) noexcept {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

/// Draws a single standard Gaussian 3-vector from `gen`.
template <class Gen>
Point3 gaussian_point(Gen& gen) {
  std::normal_distribution<double> normal;
  return {normal(gen), normal(gen), normal(gen)};
}

/// Deterministic in (n_atoms, seed): coordinates come from one xoshiro256**
/// stream seeded with `seed`, consumed x0,y0,z0,x1,...
inline CloudSample sample_cloud(std::size_t n_atoms, std::uint64_t seed) {
  if (n_atoms == 0) throw std::invalid_argument("sample_cloud: n_atoms must be >= 1");
  Xoshiro256 gen(seed);
  std::normal_distribution<double> normal;
  CloudSample cloud;
  cloud.n_atoms = n_atoms;
  cloud.seed = seed;
  cloud.points.resize(n_atoms);
  for (auto& p : cloud.points)
    for (auto& c : p) c = normal(gen);
  return cloud;
}

/// Distances in (i<j) lexicographic order: (0,1), (0,2), ..., (1,2), ...
inline std::vector<double> pairwise_distances(const CloudSample& cloud) {
  const auto& pts = cloud.points;
  std::vector<double> out;
  out.reserve(pts.size() * (pts.size() - (pts.empty() ? 0 : 1)) / 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t j = i + 1; j < pts.size(); ++j) out.push_back(distance(pts[i], pts[j]));
  return out;
}

/// Density of the distance between two independent standard Gaussian points.
inline double pdf_pair_distance(double r) {
  if (!(r >= 0.0)) throw std::invalid_argument("pdf_pair_distance: r must be >= 0");
  return r * r * std::exp(-r * r / 4.0) / std::sqrt(4.0 * std::numbers::pi);
}

/// Joint density of the two distances |x_i - x_j|, |x_i - x_l| sharing vertex i.
inline double pdf_shared_vertex(double r, double r2) {
  if (!(r >= 0.0) || !(r2 >= 0.0))
    throw std::invalid_argument("pdf_shared_vertex: distances must be >= 0");
  const double pref = 2.0 / (std::sqrt(3.0) * std::numbers::pi);
  // sinh(r r2 / 3) * exp(-(r^2 + r2^2)/3) is folded into one exponent to
  // stay finite for large arguments.
  const double x = r * r2 / 3.0;
  const double e = -(r * r + r2 * r2) / 3.0;
  const double sinh_term = 0.5 * (std::exp(e + x) - std::exp(e - x));
  return pref * r * r2 * sinh_term;
}

/// Joint density of |X_0| and the k lengths |X_i - X_0| for independent
/// standard Gaussian X_0..X_k.
inline double joint_length_density(double x0, std::span<const double> lengths) {
  if (lengths.empty()) throw std::invalid_argument("joint_length_density: lengths must be nonempty");
  if (!(x0 >= 0.0)) throw std::invalid_argument("joint_length_density: x0 must be >= 0");
  for (double r : lengths)
    if (!(r >= 0.0)) throw std::invalid_argument("joint_length_density: lengths must be >= 0");

  if (x0 == 0.0) return 0.0;
  const auto k = static_cast<double>(lengths.size());
  // x0^{2-k} prod sinh(x0 r_i) is finite as x0 -> 0: each sinh contributes a
  // factor x0, so the product behaves like x0^2 prod r_i.
  double log_val = 0.5 * (k + 1.0) * std::log(2.0 / std::numbers::pi) - 0.5 * (k + 1.0) * x0 * x0;
  for (double r : lengths) {
    if (r == 0.0) return 0.0;
    log_val += std::log(r) - 0.5 * r * r;
    const double arg = x0 * r;
    // sinh(arg)/x0, evaluated stably for small and large arg
    double term;
    if (arg < 1e-4) {
      term = std::log(r) + std::log1p(arg * arg / 6.0);
    } else {
      term = arg + std::log1p(-std::exp(-2.0 * arg)) - std::log(2.0) - std::log(x0);
    }
    log_val += term;
  }
  log_val += 2.0 * std::log(x0);
  return std::exp(log_val);
}

} // namespace erm
