#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "erm/errors.hpp"
#include "erm/histogram.hpp"
#include "erm/spectrum.hpp"
#include "erm/stats.hpp"

namespace erm {

/// Symmetric triangular density of half-width a centered at 1.
inline double triangular_density(double x, double a) {
  const double d = a - std::abs(x - 1.0);
  return d > 0.0 ? d / (a * a) : 0.0;
}

/// Triangular CDF, used for bin averages of the model.
inline double triangular_cdf(double x, double a) {
  const double t = (x - 1.0) / a;
  if (t <= -1.0) return 0.0;
  if (t >= 1.0) return 1.0;
  return t <= 0.0 ? 0.5 * (1.0 + t) * (1.0 + t) : 1.0 - 0.5 * (1.0 - t) * (1.0 - t);
}

/// sqrt(3 b0 / 2): half-width whose second moment matches 1 + b0/4.
inline double triangular_half_width_estimate(double b0) { return std::sqrt(1.5 * b0); }

inline constexpr double kTriangularFourthMoment = 1.0 / 15.0;
/// Small-b0 limit of (1/N) <Tr Q^4>.
inline const double kCenteredFourthMomentLimit = std::numbers::pi / (27.0 * std::sqrt(3.0));

struct TriangularFit {
  double a = 0.0;
  double a_err = 0.0; // set to the histogram bin width
  double residual = 0.0;
};

/// Unweighted least squares of bin heights against the bin-averaged triangle.
/// Bins outside the model support still count, with model value zero.
inline TriangularFit fit_triangular(const Histogram& hist) {
  if (hist.bins() < 2) throw FitError("fit_triangular: histogram has a single bin");
  if (!hist.normalized) throw std::invalid_argument("fit_triangular: histogram must be normalized");

  auto objective = [&](double a) {
    double rss = 0.0;
    for (std::size_t i = 0; i < hist.bins(); ++i) {
      const double model =
          (triangular_cdf(hist.bin_edges[i + 1], a) - triangular_cdf(hist.bin_edges[i], a)) /
          hist.width(i);
      const double r = hist.densities[i] - model;
      rss += r * r;
    }
    return rss;
  };

  double min_width = hist.width(0);
  for (std::size_t i = 1; i < hist.bins(); ++i) min_width = std::min(min_width, hist.width(i));
  const double span =
      std::max(std::abs(hist.bin_edges.front() - 1.0), std::abs(hist.bin_edges.back() - 1.0));
  const double lo = 0.5 * min_width;
  const double hi = std::max(span, 2.0 * lo);

  // Coarse log grid, then Brent refinement around the best grid point.
  constexpr int kGrid = 400;
  double best_a = lo;
  double best_f = objective(lo);
  std::vector<double> grid(kGrid + 1);
  for (int k = 0; k <= kGrid; ++k) {
    grid[k] = lo * std::pow(hi / lo, static_cast<double>(k) / kGrid);
    const double f = objective(grid[k]);
    if (f < best_f) {
      best_f = f;
      best_a = grid[k];
    }
  }
  const auto it = std::lower_bound(grid.begin(), grid.end(), best_a);
  const double left = it == grid.begin() ? lo : *(it - 1);
  const double right = (it + 1) >= grid.end() ? hi : *(it + 1);
  const auto [a, f] = boost::math::tools::brent_find_minima(objective, left, right, 40);

  TriangularFit fit;
  fit.a = a;
  fit.a_err = hist.width(0);
  fit.residual = f;
  if (!std::isfinite(fit.a) || fit.a <= 0.0) throw FitError("fit_triangular: no valid minimum");
  return fit;
}

/// Ensemble average of (1/N) sum mu_i^4 over spectra of centered matrices Q.
inline MeanEstimate q_fourth_moment(std::span<const SpectrumResult> specs) {
  if (specs.empty()) throw std::invalid_argument("q_fourth_moment: empty ensemble");
  std::vector<double> per_realization;
  per_realization.reserve(specs.size());
  for (const auto& s : specs) {
    if (s.kind != MatrixKind::centered)
      throw std::invalid_argument("q_fourth_moment: spectra must come from centered matrices");
    per_realization.push_back(spectral_moment(s, 4));
  }
  return mean_estimate(per_realization);
}

struct TriangularScalingPoint {
  double b0 = 0.0;
  TriangularFit fit;
};

/// Weighted regression of a against sqrt(b0), weights from the bin-width errors.
inline LinearFit triangular_scaling_fit(std::span<const TriangularScalingPoint> points) {
  std::vector<double> x, y, s;
  for (const auto& p : points) {
    x.push_back(std::sqrt(p.b0));
    y.push_back(p.fit.a);
    s.push_back(p.fit.a_err);
  }
  return linear_fit(x, y, s);
}

} // namespace erm
