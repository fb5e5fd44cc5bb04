#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/math/special_functions/gamma.hpp>
#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>
#include <Eigen/Dense>

#include "erm/errors.hpp"
#include "erm/histogram.hpp"
#include "erm/stats.hpp"

namespace erm {

struct SurmiseConstants {
  double a = 0.0;
  double b = 0.0;
};

inline void check_surmise_domain(double q, double r) {
  if (!(q > -1.0) || !(r > 0.0) || !std::isfinite(q) || !std::isfinite(r))
    throw std::invalid_argument("surmise: parameters must satisfy q > -1, r > 0");
}

/// Normalization constants of a s^q exp(-b s^r) under unit mass and unit mean.
inline SurmiseConstants surmise_constants(double q, double r) {
  check_surmise_domain(q, r);
  const double lg1 = std::lgamma((q + 1.0) / r);
  const double lg2 = std::lgamma((q + 2.0) / r);
  return {std::exp(std::log(r) + (q + 1.0) * lg2 - (q + 2.0) * lg1), std::exp(r * (lg2 - lg1))};
}

/// Wigner-like spacing density a s^q exp(-b s^r).
inline double surmise_pdf(double q, double r, double s) {
  if (!(s >= 0.0)) throw std::invalid_argument("surmise_pdf: s must be >= 0");
  const auto [a, b] = surmise_constants(q, r);
  if (s == 0.0) {
    if (q > 0.0) return 0.0;
    if (q == 0.0) return a;
    return std::numeric_limits<double>::infinity();
  }
  return a * std::exp(q * std::log(s) - b * std::pow(s, r));
}

/// P(S <= s): with t = b s^r the law becomes Gamma((q+1)/r), so this is the
/// regularized lower incomplete gamma function.
inline double surmise_cdf(double q, double r, double s) {
  const auto c = surmise_constants(q, r);
  if (s <= 0.0) return 0.0;
  return boost::math::gamma_p((q + 1.0) / r, c.b * std::pow(s, r));
}

enum class SurmiseObjective { least_squares, max_likelihood };

struct SurmiseFitOptions {
  SurmiseObjective objective = SurmiseObjective::least_squares;
  BinningPolicy binning{};
  std::vector<std::array<double, 2>> starts{{0.0, 1.0}, {1.0, 2.0}, {1.0, 1.0}};
  std::size_t max_iterations = 4000;
  double simplex_tolerance = 1e-7;
};

struct SurmiseFit {
  double q = 0.0;
  double r = 0.0;
  double a = 0.0;
  double b = 0.0;
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double goodness = 0.0; // reduced chi-square of bin counts
  double objective = 0.0;
  std::size_t sample_count = 0;
  std::size_t iterations = 0;

  double q_err() const { return std::sqrt(std::max(0.0, covariance(0, 0))); }
  double r_err() const { return std::sqrt(std::max(0.0, covariance(1, 1))); }
};

inline constexpr std::size_t kMinSurmiseSpacings = 300;
inline constexpr double kSurmiseBarrier = 1e-3;

namespace detail {

inline bool surmise_in_domain(double q, double r) {
  return q > -1.0 + kSurmiseBarrier && r > kSurmiseBarrier && q < 50.0 && r < 50.0;
}

/// Model mass per bin divided by width, for every bin of `h`.
inline std::vector<double> surmise_bin_densities(const Histogram& h, double q, double r) {
  std::vector<double> out(h.bins());
  double prev = surmise_cdf(q, r, h.bin_edges[0]);
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double next = surmise_cdf(q, r, h.bin_edges[i + 1]);
    out[i] = (next - prev) / h.width(i);
    prev = next;
  }
  return out;
}

struct NelderMeadResult {
  std::array<double, 2> x{};
  double f = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

inline NelderMeadResult gsl_nelder_mead(const std::function<double(double, double)>& f,
                                        std::array<double, 2> start, double tol,
                                        std::size_t max_iter) {
  // GSL's default handler aborts the process; failures are reported via status codes instead.
  static const gsl_error_handler_t* const previous_handler = gsl_set_error_handler_off();
  (void)previous_handler;

  struct Ctx {
    const std::function<double(double, double)>* f;
  } ctx{&f};
  gsl_multimin_function fn;
  fn.n = 2;
  fn.params = &ctx;
  fn.f = [](const gsl_vector* v, void* p) {
    const auto* c = static_cast<Ctx*>(p);
    return (*c->f)(gsl_vector_get(v, 0), gsl_vector_get(v, 1));
  };

  gsl_vector* x = gsl_vector_alloc(2);
  gsl_vector* step = gsl_vector_alloc(2);
  gsl_vector_set(x, 0, start[0]);
  gsl_vector_set(x, 1, start[1]);
  gsl_vector_set_all(step, 0.2);
  gsl_multimin_fminimizer* s = gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, 2);
  gsl_multimin_fminimizer_set(s, &fn, x, step);

  NelderMeadResult res;
  int status = GSL_CONTINUE;
  while (status == GSL_CONTINUE && res.iterations < max_iter) {
    ++res.iterations;
    if (gsl_multimin_fminimizer_iterate(s) != GSL_SUCCESS) break;
    status = gsl_multimin_test_size(gsl_multimin_fminimizer_size(s), tol);
  }
  res.converged = status == GSL_SUCCESS;
  res.x = {gsl_vector_get(s->x, 0), gsl_vector_get(s->x, 1)};
  res.f = s->fval;
  gsl_multimin_fminimizer_free(s);
  gsl_vector_free(step);
  gsl_vector_free(x);
  return res;
}

/// Reduced chi-square of bin counts against the model; bins with expected
/// count below 5 are merged into their right neighbour.
inline double surmise_goodness(const Histogram& h, double q, double r) {
  const double n = static_cast<double>(h.sample_count);
  std::vector<double> observed, expected;
  double o = 0.0, e = 0.0;
  double prev = surmise_cdf(q, r, h.bin_edges[0]);
  for (std::size_t i = 0; i < h.bins(); ++i) {
    const double next = surmise_cdf(q, r, h.bin_edges[i + 1]);
    o += static_cast<double>(h.counts[i]);
    e += n * (next - prev);
    prev = next;
    if (e >= 5.0) {
      observed.push_back(o);
      expected.push_back(e);
      o = e = 0.0;
    }
  }
  if (!expected.empty()) {
    observed.back() += o;
    expected.back() += e;
  }
  if (expected.size() <= 3) return std::numeric_limits<double>::infinity();
  double chi2 = 0.0;
  for (std::size_t i = 0; i < expected.size(); ++i) {
    const double d = observed[i] - expected[i];
    chi2 += d * d / expected[i];
  }
  return chi2 / static_cast<double>(expected.size() - 3);
}

} // namespace detail

/// Fits (q, r) of the Wigner-like surmise to a spacing sample by multi-start
/// simplex search.
inline SurmiseFit fit_surmise(std::span<const double> spacing_sample, const SurmiseFitOptions& opts = {}) {
  if (spacing_sample.size() < kMinSurmiseSpacings)
    throw std::invalid_argument("fit_surmise: need at least " + std::to_string(kMinSurmiseSpacings) +
                                " spacings, got " + std::to_string(spacing_sample.size()));
  for (double s : spacing_sample)
    if (!(s >= 0.0) || !std::isfinite(s)) throw std::invalid_argument("fit_surmise: invalid spacing");

  BinningPolicy binning = opts.binning;
  if (!binning.lower) binning.lower = 0.0;
  const Histogram hist = make_histogram({spacing_sample.begin(), spacing_sample.end()}, binning, true);
  constexpr double kOutside = 1e300;

  std::function<double(double, double)> objective;
  if (opts.objective == SurmiseObjective::least_squares) {
    objective = [&](double q, double r) {
      if (!detail::surmise_in_domain(q, r)) return kOutside;
      const auto model = detail::surmise_bin_densities(hist, q, r);
      double rss = 0.0;
      for (std::size_t i = 0; i < model.size(); ++i) {
        const double d = hist.densities[i] - model[i];
        rss += d * d;
      }
      return std::isfinite(rss) ? rss : kOutside;
    };
  } else {
    objective = [&](double q, double r) {
      if (!detail::surmise_in_domain(q, r)) return kOutside;
      const auto [a, b] = surmise_constants(q, r);
      const double la = std::log(a);
      double nll = 0.0;
      for (double s : spacing_sample) {
        const double ls = std::log(std::max(s, 1e-300));
        nll -= la + q * ls - b * std::pow(s, r);
      }
      return std::isfinite(nll) ? nll : kOutside;
    };
  }

  detail::NelderMeadResult best;
  best.f = std::numeric_limits<double>::infinity();
  bool any_converged = false;
  for (const auto& start : opts.starts) {
    auto res = detail::gsl_nelder_mead(objective, start, opts.simplex_tolerance, opts.max_iterations);
    if (!res.converged) continue;
    any_converged = true;
    if (res.f < best.f) best = res;
  }
  if (!any_converged || !(best.f < kOutside))
    throw FitError("fit_surmise: simplex search did not converge from any start (" +
                   std::to_string(spacing_sample.size()) + " spacings, " +
                   std::to_string(hist.bins()) + " bins)");

  SurmiseFit fit;
  fit.q = best.x[0];
  fit.r = best.x[1];
  const auto c = surmise_constants(fit.q, fit.r);
  fit.a = c.a;
  fit.b = c.b;
  fit.objective = best.f;
  fit.iterations = best.iterations;
  fit.sample_count = spacing_sample.size();
  fit.goodness = detail::surmise_goodness(hist, fit.q, fit.r);

  // Parameter covariance from finite differences.
  const double hq = 1e-4 * std::max(1.0, std::abs(fit.q));
  const double hr = 1e-4 * std::max(1.0, std::abs(fit.r));
  Eigen::Matrix2d info;
  if (opts.objective == SurmiseObjective::least_squares) {
    const auto base_p = detail::surmise_bin_densities(hist, fit.q + hq, fit.r);
    const auto base_m = detail::surmise_bin_densities(hist, fit.q - hq, fit.r);
    const auto r_p = detail::surmise_bin_densities(hist, fit.q, fit.r + hr);
    const auto r_m = detail::surmise_bin_densities(hist, fit.q, fit.r - hr);
    Eigen::MatrixXd jac(static_cast<Eigen::Index>(hist.bins()), 2);
    for (std::size_t i = 0; i < hist.bins(); ++i) {
      jac(static_cast<Eigen::Index>(i), 0) = (base_p[i] - base_m[i]) / (2.0 * hq);
      jac(static_cast<Eigen::Index>(i), 1) = (r_p[i] - r_m[i]) / (2.0 * hr);
    }
    const double dof = std::max(1.0, static_cast<double>(hist.bins()) - 2.0);
    info = jac.transpose() * jac / (fit.objective / dof);
  } else {
    const auto f = [&](double dq, double dr) { return objective(fit.q + dq, fit.r + dr); };
    const double f0 = f(0, 0);
    info(0, 0) = (f(hq, 0) - 2 * f0 + f(-hq, 0)) / (hq * hq);
    info(1, 1) = (f(0, hr) - 2 * f0 + f(0, -hr)) / (hr * hr);
    info(0, 1) = info(1, 0) = (f(hq, hr) - f(hq, -hr) - f(-hq, hr) + f(-hq, -hr)) / (4 * hq * hr);
  }
  if (std::abs(info.determinant()) > 0.0) fit.covariance = info.inverse();
  return fit;
}

/// Geometric cutoffs from `hi` down to `lo`.
inline std::vector<double> default_small_spacing_grid(double hi = 0.2, double lo = 0.02,
                                                      std::size_t points = 10) {
  std::vector<double> g(points);
  for (std::size_t k = 0; k < points; ++k)
    g[k] = hi * std::pow(lo / hi, static_cast<double>(k) / static_cast<double>(points - 1));
  return g;
}

struct SmallSpacingExponent {
  double q = 0.0;
  double std_error = 0.0;
};

/// Repulsion exponent from P(s <= s0) ~ s0^{q+1}: weighted log-log regression
/// over the cutoffs, with Poisson weights from the counts.
inline SmallSpacingExponent small_spacing_exponent(std::span<const double> spacing_sample,
                                                   std::span<const double> s0_grid) {
  if (spacing_sample.empty()) throw std::invalid_argument("small_spacing_exponent: no spacings");
  if (s0_grid.size() < 2) throw std::invalid_argument("small_spacing_exponent: need >= 2 cutoffs");
  std::vector<double> sorted(spacing_sample.begin(), spacing_sample.end());
  std::sort(sorted.begin(), sorted.end());
  const double n = static_cast<double>(sorted.size());

  std::vector<double> x, y, sigma;
  for (double s0 : s0_grid) {
    if (!(s0 > 0.0)) throw std::invalid_argument("small_spacing_exponent: cutoffs must be > 0");
    const auto count = static_cast<double>(std::upper_bound(sorted.begin(), sorted.end(), s0) - sorted.begin());
    if (count == 0.0)
      throw std::range_error("small_spacing_exponent: no spacings below cutoff " + std::to_string(s0));
    x.push_back(std::log(s0));
    y.push_back(std::log(count / n));
    sigma.push_back(1.0 / std::sqrt(count));
  }
  const auto fit = linear_fit(x, y, sigma);
  return {fit.slope - 1.0, fit.slope_stderr};
}

} // namespace erm
