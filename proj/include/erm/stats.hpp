#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

namespace erm {

struct MeanEstimate {
  double mean = 0.0;
  double std_error = 0.0; // standard error of the mean
  double std_dev = 0.0;
  std::size_t count = 0;
};

inline MeanEstimate mean_estimate(std::span<const double> xs) {
  if (xs.empty()) throw std::invalid_argument("mean_estimate: empty sample");
  MeanEstimate e;
  e.count = xs.size();
  double sum = 0.0;
  for (double x : xs) sum += x;
  e.mean = sum / static_cast<double>(xs.size());
  if (xs.size() > 1) {
    double ss = 0.0;
    for (double x : xs) ss += (x - e.mean) * (x - e.mean);
    e.std_dev = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    e.std_error = e.std_dev / std::sqrt(static_cast<double>(xs.size()));
  }
  return e;
}

/// Linear interpolated quantile of an ascending sample, p in [0, 1].
inline double sorted_quantile(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw std::invalid_argument("sorted_quantile: empty sample");
  const double pos = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double intercept_stderr = 0.0;
};

/// Least-squares line y = intercept + slope x. With `sigma` given, a weighted
/// fit with weights 1/sigma^2 and parameter errors from the weights; without
/// it, errors are scaled by the residual variance.
inline LinearFit linear_fit(std::span<const double> x, std::span<const double> y,
                            std::span<const double> sigma = {}) {
  if (x.size() != y.size()) throw std::invalid_argument("linear_fit: size mismatch");
  if (!sigma.empty() && sigma.size() != x.size())
    throw std::invalid_argument("linear_fit: sigma size mismatch");
  if (x.size() < 2) throw std::invalid_argument("linear_fit: need at least 2 points");

  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double w = sigma.empty() ? 1.0 : 1.0 / (sigma[i] * sigma[i]);
    sw += w;
    sx += w * x[i];
    sy += w * y[i];
    sxx += w * x[i] * x[i];
    sxy += w * x[i] * y[i];
  }
  const double det = sw * sxx - sx * sx;
  if (!(std::abs(det) > 0.0)) throw std::invalid_argument("linear_fit: degenerate abscissae");

  LinearFit f;
  f.slope = (sw * sxy - sx * sy) / det;
  f.intercept = (sxx * sy - sx * sxy) / det;
  double var_slope = sw / det;
  double var_icpt = sxx / det;
  if (sigma.empty()) {
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = y[i] - f.intercept - f.slope * x[i];
      rss += r * r;
    }
    const double s2 = x.size() > 2 ? rss / static_cast<double>(x.size() - 2) : 0.0;
    var_slope *= s2;
    var_icpt *= s2;
  }
  f.slope_stderr = std::sqrt(var_slope);
  f.intercept_stderr = std::sqrt(var_icpt);
  return f;
}

/// One-sample Kolmogorov-Smirnov statistic sup |F_n - F|.
inline double ks_statistic(std::vector<double> sample, const std::function<double(double)>& cdf) {
  if (sample.empty()) throw std::invalid_argument("ks_statistic: empty sample");
  std::sort(sample.begin(), sample.end());
  const double n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

} // namespace erm
