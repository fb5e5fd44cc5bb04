#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace erm {

enum class UnfoldingMethod { polynomial, staircase };

struct UnfoldingOptions {
  UnfoldingMethod method = UnfoldingMethod::polynomial;
  int degree = 7;
};

inline constexpr std::size_t kMinUnfoldCount = 50;

/// Smooth estimate of the ensemble-mean counting function on [lo, hi],
/// measured from lo (so it is ~0 at lo).
class CountingFunction {
public:
  /// `pooled` holds the eigenvalues of `realizations` spectra inside the window.
  static CountingFunction fit(std::vector<double> pooled, std::size_t realizations,
                              const UnfoldingOptions& opts = {}) {
    if (realizations == 0) throw std::invalid_argument("CountingFunction: realizations must be >= 1");
    if (pooled.size() < kMinUnfoldCount)
      throw std::invalid_argument("unfold: need at least " + std::to_string(kMinUnfoldCount) +
                                  " eigenvalues in the window, got " + std::to_string(pooled.size()));
    std::sort(pooled.begin(), pooled.end());

    CountingFunction cf;
    cf.realizations_ = static_cast<double>(realizations);
    cf.lo_ = pooled.front();
    cf.hi_ = pooled.back();
    cf.pooled_ = std::move(pooled);
    cf.method_ = opts.method;

    if (opts.method == UnfoldingMethod::polynomial && cf.hi_ > cf.lo_) {
      if (opts.degree < 1) throw std::invalid_argument("unfold: polynomial degree must be >= 1");
      cf.fit_polynomial(opts.degree);
      if (!cf.polynomial_is_monotone()) {
        cf.method_ = UnfoldingMethod::staircase;
        cf.fell_back_ = true;
      }
    } else {
      cf.method_ = UnfoldingMethod::staircase;
    }
    return cf;
  }

  double operator()(double x) const {
    return method_ == UnfoldingMethod::polynomial ? eval_polynomial(x) : eval_staircase(x);
  }

  UnfoldingMethod method() const noexcept { return method_; }
  double lower() const noexcept { return lo_; }
  double upper() const noexcept { return hi_; }

  std::string describe() const {
    if (method_ == UnfoldingMethod::polynomial)
      return "polynomial(degree=" + std::to_string(coeffs_.size() - 1) + ")";
    return fell_back_ ? "staircase(polynomial not monotone)" : "staircase";
  }

private:
  double scaled(double x) const {
    const double half = 0.5 * (hi_ - lo_);
    return (x - 0.5 * (hi_ + lo_)) / half;
  }

  // Staircase value at pooled point k is (k + 1/2) / R.
  void fit_polynomial(int degree) {
    const auto n = static_cast<Eigen::Index>(pooled_.size());
    Eigen::MatrixXd vander(n, degree + 1);
    Eigen::VectorXd y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      const double t = scaled(pooled_[static_cast<std::size_t>(k)]);
      double p = 1.0;
      for (int d = 0; d <= degree; ++d) {
        vander(k, d) = p;
        p *= t;
      }
      y(k) = (static_cast<double>(k) + 0.5) / realizations_;
    }
    const Eigen::VectorXd c = vander.colPivHouseholderQr().solve(y);
    coeffs_.assign(c.data(), c.data() + c.size());
  }

  double eval_polynomial(double x) const {
    const double t = scaled(x);
    double v = 0.0;
    for (auto it = coeffs_.rbegin(); it != coeffs_.rend(); ++it) v = v * t + *it;
    return v;
  }

  bool polynomial_is_monotone() const {
    double prev = eval_polynomial(pooled_.front());
    for (std::size_t k = 1; k < pooled_.size(); ++k) {
      const double v = eval_polynomial(pooled_[k]);
      if (v < prev) return false;
      prev = v;
    }
    return true;
  }

  // Piecewise-linear interpolation through (x_k, (k+1/2)/R).
  double eval_staircase(double x) const {
    const auto& p = pooled_;
    if (p.size() == 1 || x <= p.front()) return 0.5 / realizations_;
    if (x >= p.back()) return (static_cast<double>(p.size()) - 0.5) / realizations_;
    const auto it = std::upper_bound(p.begin(), p.end(), x);
    const auto k = static_cast<std::size_t>(it - p.begin()); // p[k-1] <= x < p[k]
    const double x0 = p[k - 1];
    const double x1 = p[k];
    const double frac = x1 > x0 ? (x - x0) / (x1 - x0) : 0.0;
    return (static_cast<double>(k - 1) + 0.5 + frac) / realizations_;
  }

  std::vector<double> pooled_;
  std::vector<double> coeffs_;
  double realizations_ = 1.0;
  double lo_ = 0.0;
  double hi_ = 0.0;
  UnfoldingMethod method_ = UnfoldingMethod::polynomial;
  bool fell_back_ = false;
};

struct UnfoldedSpectrum {
  std::vector<double> values; // ascending
  double window_lo = 0.0;
  double window_hi = 0.0;
  std::string method;
};

namespace detail {

inline std::vector<double> map_sorted(std::span<const double> eigenvalues, const CountingFunction& cf) {
  std::vector<double> out;
  out.reserve(eigenvalues.size());
  for (double l : eigenvalues) out.push_back(cf(l));
  // A monotone map of sorted input is sorted; clamp rounding-level inversions.
  for (std::size_t i = 1; i < out.size(); ++i) out[i] = std::max(out[i], out[i - 1]);
  return out;
}

inline void rescale_unit_spacing(std::vector<double>& v, double mean_spacing) {
  if (!(mean_spacing > 0.0)) return;
  const double origin = v.front();
  for (double& x : v) x = origin + (x - origin) / mean_spacing;
}

} // namespace detail

/// Unfolds one ascending sequence with a counting function fitted to itself,
/// rescaled to unit mean spacing.
inline UnfoldedSpectrum unfold(std::span<const double> eigenvalues, const UnfoldingOptions& opts = {}) {
  if (!std::is_sorted(eigenvalues.begin(), eigenvalues.end()))
    throw std::invalid_argument("unfold: eigenvalues must be ascending");
  const auto cf = CountingFunction::fit({eigenvalues.begin(), eigenvalues.end()}, 1, opts);
  UnfoldedSpectrum u;
  u.values = detail::map_sorted(eigenvalues, cf);
  u.window_lo = eigenvalues.front();
  u.window_hi = eigenvalues.back();
  u.method = cf.describe();
  const double mean = (u.values.back() - u.values.front()) / static_cast<double>(u.values.size() - 1);
  detail::rescale_unit_spacing(u.values, mean);
  return u;
}

/// Unfolds every realization's eigenvalues inside [lo, hi] with one counting
/// function fitted to the pooled ensemble. The common rescaling makes the
/// pooled mean spacing exactly 1.
inline std::vector<UnfoldedSpectrum> unfold_ensemble(std::span<const std::vector<double>> spectra,
                                                     double lo, double hi,
                                                     const UnfoldingOptions& opts = {}) {
  std::vector<std::vector<double>> windows;
  std::vector<double> pooled;
  for (const auto& s : spectra) {
    if (!std::is_sorted(s.begin(), s.end()))
      throw std::invalid_argument("unfold_ensemble: eigenvalues must be ascending");
    auto first = std::lower_bound(s.begin(), s.end(), lo);
    auto last = std::upper_bound(s.begin(), s.end(), hi);
    windows.emplace_back(first, last);
    pooled.insert(pooled.end(), first, last);
  }
  const auto cf = CountingFunction::fit(std::move(pooled), spectra.size(), opts);

  std::vector<UnfoldedSpectrum> out;
  double total = 0.0;
  std::size_t gaps = 0;
  for (const auto& w : windows) {
    UnfoldedSpectrum u;
    u.values = detail::map_sorted(w, cf);
    u.window_lo = lo;
    u.window_hi = hi;
    u.method = cf.describe();
    if (u.values.size() >= 2) {
      total += u.values.back() - u.values.front();
      gaps += u.values.size() - 1;
    }
    out.push_back(std::move(u));
  }
  if (gaps > 0) {
    const double mean = total / static_cast<double>(gaps);
    for (auto& u : out)
      if (!u.values.empty()) detail::rescale_unit_spacing(u.values, mean);
  }
  return out;
}

/// Nearest-neighbour spacings of an unfolded sequence.
inline std::vector<double> spacings(const UnfoldedSpectrum& u) {
  if (u.values.size() < 2) throw std::invalid_argument("spacings: need at least 2 values");
  std::vector<double> s(u.values.size() - 1);
  for (std::size_t i = 0; i + 1 < u.values.size(); ++i) s[i] = u.values[i + 1] - u.values[i];
  return s;
}

} // namespace erm
