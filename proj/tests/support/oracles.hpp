#pragma once

// Independent reference implementations used as test oracles. Nothing here
// calls into the library.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace oracle {

inline double integrate(const std::function<double(double)>& f, double a, double b, double tol = 1e-13) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 20, tol);
}

/// Sum of integrals over consecutive subintervals of width `step`; used for
/// oscillatory integrands on long ranges.
inline double integrate_periodwise(const std::function<double(double)>& f, double a, double b, double step) {
  double sum = 0.0;
  for (double x = a; x < b; x += step) sum += integrate(f, x, std::min(b, x + step), 1e-12);
  return sum;
}

inline double integrate_2d(const std::function<double(double, double)>& f, double a, double b, double tol = 1e-11) {
  return integrate([&](double x) { return integrate([&](double y) { return f(x, y); }, a, b, tol); }, a, b, tol);
}

/// CDF of the distance between two independent standard Gaussian points in 3D;
/// |x - y|^2 / 2 is chi-square with 3 degrees of freedom.
inline double pair_distance_cdf(double r) {
  if (r <= 0.0) return 0.0;
  return std::erf(r / 2.0) - r / std::sqrt(std::numbers::pi) * std::exp(-r * r / 4.0);
}

/// Surmise constants computed from moments of the generalized gamma law.
inline std::pair<double, double> surmise_ab(double q, double r) {
  const double g1 = std::tgamma((q + 1.0) / r);
  const double g2 = std::tgamma((q + 2.0) / r);
  const double b = std::pow(g2 / g1, r);
  const double a = r * std::pow(b, (q + 1.0) / r) / g1;
  return {a, b};
}

/// Draws from a s^q exp(-b s^r): b s^r is Gamma((q+1)/r, 1) distributed.
inline std::vector<double> sample_surmise(double q, double r, std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::gamma_distribution<double> gamma((q + 1.0) / r, 1.0);
  const double b = surmise_ab(q, r).second;
  std::vector<double> out(n);
  for (auto& s : out) s = std::pow(gamma(gen) / b, 1.0 / r);
  return out;
}

/// One-parameter Brody density.
inline double brody_pdf(double beta, double s) {
  const double b = std::pow(std::tgamma((beta + 2.0) / (beta + 1.0)), beta + 1.0);
  return (beta + 1.0) * b * std::pow(s, beta) * std::exp(-b * std::pow(s, beta + 1.0));
}

inline double semi_poisson_pdf(double s) { return 4.0 * s * std::exp(-2.0 * s); }

inline double wigner_dyson_pdf(double s) {
  return std::numbers::pi / 2.0 * s * std::exp(-std::numbers::pi * s * s / 4.0);
}

/// Columns are independent uniform random unit vectors in R^n.
inline Eigen::MatrixXd sphere_uniform_vectors(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd v(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(count));
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    for (Eigen::Index j = 0; j < v.rows(); ++j) v(j, c) = normal(gen);
    v.col(c).normalize();
  }
  return v;
}

/// <S_ij S_jk S_kl S_li> exactly: integrating out the Gaussian positions in the
/// plane-wave form of sinc gives Tr K^4 for the sphere kernel exp(M(n.n' - 1)),
/// whose eigenvalues are exp(-M) i_l(M).
inline double four_cycle_moment(double M) {
  double sum = 0.0;
  for (int l = 0; l < 5000; ++l) {
    const double il = std::sqrt(std::numbers::pi / (2.0 * M)) * boost::math::cyl_bessel_i(l + 0.5, M);
    const double k = std::exp(-M) * il;
    const double term = (2.0 * l + 1.0) * k * k * k * k;
    sum += term;
    if (l > 10 && term < 1e-18 * sum) break;
  }
  return sum;
}

/// Roots of det(x I - A) for small symmetric A, by sign changes on a fine grid
/// and bisection. Assumes simple eigenvalues.
inline std::vector<double> characteristic_roots(const Eigen::MatrixXd& a) {
  const auto n = a.rows();
  const double bound = a.cwiseAbs().rowwise().sum().maxCoeff() + 1.0;
  auto p = [&](double x) {
    return (x * Eigen::MatrixXd::Identity(n, n) - a).partialPivLu().determinant();
  };
  std::vector<double> roots;
  constexpr int kGrid = 200000;
  double x0 = -bound, f0 = p(x0);
  for (int k = 1; k <= kGrid; ++k) {
    const double x1 = -bound + 2.0 * bound * k / kGrid;
    const double f1 = p(x1);
    if (f0 == 0.0) {
      roots.push_back(x0);
    } else if (f0 * f1 < 0.0) {
      double lo = x0, hi = x1, flo = f0;
      for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double fm = p(mid);
        if ((fm < 0.0) == (flo < 0.0)) {
          lo = mid;
          flo = fm;
        } else {
          hi = mid;
        }
      }
      roots.push_back(0.5 * (lo + hi));
    }
    x0 = x1;
    f0 = f1;
  }
  return roots;
}

/// Pearson correlation of two equal-length samples.
inline double correlation(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

} // namespace oracle
