#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <lapacke.h>

#include "erm/decay_matrix.hpp"
#include "erm/errors.hpp"

namespace erm {

enum class MatrixKind { decay, centered };

struct SpectrumResult {
  std::vector<double> eigenvalues;        // ascending
  std::optional<Eigen::MatrixXd> eigenvectors; // column i pairs with eigenvalue i
  std::uint64_t source_seed = 0;
  std::size_t n_atoms = 0;
  double cooperativeness = 0.0;
  MatrixKind kind = MatrixKind::decay;

  std::size_t size() const noexcept { return eigenvalues.size(); }
  bool has_vectors() const noexcept { return eigenvectors.has_value(); }
};

namespace detail {

/// Makes the largest-magnitude component of every column positive.
inline void fix_eigenvector_signs(Eigen::MatrixXd& v) {
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    Eigen::Index imax = 0;
    v.col(c).cwiseAbs().maxCoeff(&imax);
    if (v(imax, c) < 0.0) v.col(c) *= -1.0;
  }
}

inline SpectrumResult symmetric_eigensolve(Eigen::MatrixXd a, bool with_vectors, std::uint64_t seed) {
  const auto n = a.rows();
  if (n != a.cols()) throw std::invalid_argument("eigendecompose: matrix must be square");
  if (!a.allFinite()) throw std::invalid_argument("eigendecompose: matrix has non-finite entries");

  SpectrumResult out;
  out.source_seed = seed;
  out.n_atoms = static_cast<std::size_t>(n);
  out.eigenvalues.resize(static_cast<std::size_t>(n));
  if (n == 0) return out;

  // Householder tridiagonalization, then MRRR on the tridiagonal matrix.
  // The back-transformation runs through Eigen rather than LAPACK's dormtr:
  // some OpenBLAS builds ship a dgemm kernel that is wrong on newer AVX-512
  // CPUs, and dormtr is the only step here that reaches dgemm.
  const auto ln = static_cast<lapack_int>(n);
  Eigen::VectorXd diag(n), off(n), tau(std::max<Eigen::Index>(1, n - 1));
  lapack_int info = LAPACKE_dsytrd(LAPACK_COL_MAJOR, 'L', ln, a.data(), ln, diag.data(), off.data(), tau.data());
  if (info != 0)
    throw ComputationError("eigendecompose: dsytrd failed with info=" + std::to_string(info), seed);

  Eigen::MatrixXd z(with_vectors ? n : 1, with_vectors ? n : 1);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(n));
  lapack_int found = 0;
  lapack_logical tryrac = 1;
  info = LAPACKE_dstemr(LAPACK_COL_MAJOR, with_vectors ? 'V' : 'N', 'A', ln, diag.data(), off.data(), 0.0, 0.0, 0,
                        0, &found, out.eigenvalues.data(), z.data(), with_vectors ? ln : 1, ln, support.data(),
                        &tryrac);
  if (info != 0 || found != ln)
    throw ComputationError("eigendecompose: dstemr failed with info=" + std::to_string(info), seed);

  if (with_vectors) {
    if (n > 1) {
      tau.conservativeResize(n - 1);
      Eigen::HouseholderSequence<Eigen::MatrixXd, Eigen::VectorXd> q(a, tau);
      q.setLength(n - 1).setShift(1);
      z.applyOnTheLeft(q);
    }
    fix_eigenvector_signs(z);
    out.eigenvectors = std::move(z);
  }
  return out;
}

} // namespace detail

inline SpectrumResult eigendecompose(const DecayMatrix& s, bool with_vectors = false) {
  auto out = detail::symmetric_eigensolve(s.entries, with_vectors, s.seed);
  out.cooperativeness = s.cooperativeness;
  out.kind = MatrixKind::decay;
  return out;
}

inline SpectrumResult eigendecompose(const CenteredMatrix& q, bool with_vectors = false) {
  auto out = detail::symmetric_eigensolve(q.entries, with_vectors, q.seed);
  out.cooperativeness = q.cooperativeness;
  out.kind = MatrixKind::centered;
  return out;
}

/// (1/N) sum_i lambda_i^m.
inline double spectral_moment(const SpectrumResult& spec, int m) {
  if (m < 0) throw std::invalid_argument("spectral_moment: m must be >= 0");
  if (spec.eigenvalues.empty()) throw std::invalid_argument("spectral_moment: empty spectrum");
  if (m == 0) return 1.0;
  double sum = 0.0;
  for (double l : spec.eigenvalues) {
    double p = l;
    for (int k = 1; k < m; ++k) p *= l;
    sum += p;
  }
  return sum / static_cast<double>(spec.eigenvalues.size());
}

/// Instantaneous loss rate -dP/dt of the excitation amplitudes beta, in units
/// of the single-atom rate: beta^dagger S beta.
inline double decay_rate(std::span<const std::complex<double>> beta, const DecayMatrix& s) {
  const auto n = s.entries.rows();
  if (static_cast<Eigen::Index>(beta.size()) != n)
    throw std::invalid_argument("decay_rate: beta has " + std::to_string(beta.size()) +
                                " components, matrix is " + std::to_string(n) + "x" +
                                std::to_string(n));
  for (const auto& b : beta)
    if (!std::isfinite(b.real()) || !std::isfinite(b.imag()))
      throw std::invalid_argument("decay_rate: beta must be finite");
  Eigen::VectorXd re(n);
  Eigen::VectorXd im(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    re(i) = beta[static_cast<std::size_t>(i)].real();
    im(i) = beta[static_cast<std::size_t>(i)].imag();
  }
  // With S real symmetric the cross terms cancel: beta^dagger S beta = re'S re + im'S im.
  const double rate = re.dot(s.entries * re) + im.dot(s.entries * im);
  return std::max(0.0, rate);
}

} // namespace erm
