#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

#include "erm/histogram.hpp"
#include "erm/spectrum.hpp"
#include "erm/stats.hpp"

namespace erm {

/// 1 / sum_j psi_j^4 for a unit vector.
inline double participation_ratio(std::span<const double> v) {
  double norm2 = 0.0;
  double sum4 = 0.0;
  for (double x : v) {
    const double x2 = x * x;
    norm2 += x2;
    sum4 += x2 * x2;
  }
  if (v.empty() || std::abs(norm2 - 1.0) > 1e-8)
    throw std::invalid_argument("participation_ratio: vector is not normalized");
  return 1.0 / sum4;
}

/// sum_j |psi_j|^{2q} of `v` after exact renormalization.
inline double vector_moment(const Eigen::Ref<const Eigen::VectorXd>& v, int q) {
  if (q < 1) throw std::invalid_argument("vector_moment: q must be >= 1");
  const double norm2 = v.squaredNorm();
  if (!(norm2 > 0.0)) throw std::invalid_argument("vector_moment: zero vector");
  double sum = 0.0;
  for (Eigen::Index j = 0; j < v.size(); ++j) sum += std::pow(v(j) * v(j) / norm2, q);
  return sum;
}

struct VectorStats {
  double eigenvalue = 0.0;
  double participation_ratio = 0.0;
  std::vector<double> amplitude_sample; // sqrt(N) psi_j
};

inline const Eigen::MatrixXd& require_vectors(const SpectrumResult& spec, const char* who) {
  if (!spec.eigenvectors) throw std::invalid_argument(std::string(who) + ": spectrum has no eigenvectors");
  return *spec.eigenvectors;
}

inline VectorStats vector_stats(const SpectrumResult& spec, std::size_t index) {
  const auto& vecs = require_vectors(spec, "vector_stats");
  if (index >= spec.size()) throw std::out_of_range("vector_stats: index out of range");
  const Eigen::VectorXd v = vecs.col(static_cast<Eigen::Index>(index)).normalized();
  VectorStats st;
  st.eigenvalue = spec.eigenvalues[index];
  st.participation_ratio = participation_ratio(std::span(v.data(), static_cast<std::size_t>(v.size())));
  const double scale = std::sqrt(static_cast<double>(v.size()));
  st.amplitude_sample.reserve(static_cast<std::size_t>(v.size()));
  for (Eigen::Index j = 0; j < v.size(); ++j) st.amplitude_sample.push_back(scale * v(j));
  return st;
}

struct PrPoint {
  double eigenvalue = 0.0;
  double participation_ratio = 0.0;
};

/// Participation ratio of every eigenvector, in eigenvalue order.
inline std::vector<PrPoint> pr_profile(const SpectrumResult& spec) {
  const auto& vecs = require_vectors(spec, "pr_profile");
  std::vector<PrPoint> out(spec.size());
  for (std::size_t i = 0; i < spec.size(); ++i)
    out[i] = {spec.eigenvalues[i], 1.0 / vector_moment(vecs.col(static_cast<Eigen::Index>(i)), 2)};
  return out;
}

/// Mean of sum_j |psi_j|^{2q} over the columns of `vectors`.
inline double eigenvector_moment(const Eigen::Ref<const Eigen::MatrixXd>& vectors, int q) {
  if (vectors.cols() == 0) throw std::invalid_argument("eigenvector_moment: empty window");
  double sum = 0.0;
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) sum += vector_moment(vectors.col(c), q);
  return sum / static_cast<double>(vectors.cols());
}

/// Mean over the columns of 1 / sum_j |psi_j|^{2q}.
inline double mean_inverse_moment(const Eigen::Ref<const Eigen::MatrixXd>& vectors, int q) {
  if (vectors.cols() == 0) throw std::invalid_argument("mean_inverse_moment: empty window");
  double sum = 0.0;
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) sum += 1.0 / vector_moment(vectors.col(c), q);
  return sum / static_cast<double>(vectors.cols());
}

inline Eigen::MatrixXd select_columns(const Eigen::MatrixXd& m, std::span<const std::size_t> idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) out.col(static_cast<Eigen::Index>(k)) = m.col(static_cast<Eigen::Index>(idx[k]));
  return out;
}

inline constexpr std::size_t kPrSmoothingWidth = 51;
inline constexpr std::size_t kPrWindowVectors = 100;

struct PrPeak {
  std::size_t index = 0; // eigenvalue index of the smoothed maximum
  double eigenvalue = 0.0;
  double smoothed_pr = 0.0;
  std::vector<std::size_t> window; // nearest eigenvector indices around the peak
};

struct PrMaxima {
  PrPeak subradiant;   // lambda < 1
  PrPeak superradiant; // lambda > 1

  /// Eigenvalue distance between the two maxima.
  double separation() const { return superradiant.eigenvalue - subradiant.eigenvalue; }
};

/// Centered moving average; only positions with a full window are defined.
inline std::vector<double> moving_average(std::span<const double> xs, std::size_t width) {
  std::vector<double> out(xs.size(), std::numeric_limits<double>::quiet_NaN());
  if (width == 0 || xs.size() < width) return out;
  const std::size_t half = width / 2;
  double acc = 0.0;
  for (std::size_t i = 0; i < width; ++i) acc += xs[i];
  for (std::size_t c = half; c + half < xs.size(); ++c) {
    out[c] = acc / static_cast<double>(width);
    if (c + half + 1 < xs.size()) acc += xs[c + half + 1] - xs[c - half];
  }
  return out;
}

inline std::vector<std::size_t> nearest_indices(std::size_t center, std::size_t count, std::size_t n) {
  count = std::min(count, n);
  std::size_t lo = center >= count / 2 ? center - count / 2 : 0;
  if (lo + count > n) lo = n - count;
  std::vector<std::size_t> idx(count);
  for (std::size_t k = 0; k < count; ++k) idx[k] = lo + k;
  return idx;
}

/// Locates the participation-ratio maxima on each side of lambda = 1 after
/// smoothing the profile over `smoothing` consecutive eigenvalues, and takes
/// the `window` eigenvectors nearest to each.
inline PrMaxima locate_pr_maxima(std::span<const PrPoint> profile,
                                 std::size_t smoothing = kPrSmoothingWidth,
                                 std::size_t window = kPrWindowVectors) {
  std::vector<double> pr(profile.size());
  for (std::size_t i = 0; i < profile.size(); ++i) pr[i] = profile[i].participation_ratio;
  std::size_t width = std::min(smoothing, profile.size());
  if (width % 2 == 0 && width > 0) --width;
  const auto smooth = moving_average(pr, width);

  PrMaxima out;
  bool have_sub = false, have_super = false;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (std::isnan(smooth[i])) continue;
    PrPeak& peak = profile[i].eigenvalue < 1.0 ? out.subradiant : out.superradiant;
    bool& have = profile[i].eigenvalue < 1.0 ? have_sub : have_super;
    if (!have || smooth[i] > peak.smoothed_pr) {
      peak.index = i;
      peak.eigenvalue = profile[i].eigenvalue;
      peak.smoothed_pr = smooth[i];
      have = true;
    }
  }
  if (!have_sub || !have_super)
    throw std::invalid_argument("locate_pr_maxima: spectrum does not straddle lambda = 1");
  out.subradiant.window = nearest_indices(out.subradiant.index, window, profile.size());
  out.superradiant.window = nearest_indices(out.superradiant.index, window, profile.size());
  return out;
}

/// KS distance above which a window is reported as not Porter-Thomas.
inline constexpr double kPorterThomasKsThreshold = 0.05;

struct PorterThomasResult {
  double ks = 0.0;
  Histogram amplitudes; // normalized histogram of u
  std::size_t sample_count = 0;
};

inline double standard_normal_cdf(double u) { return 0.5 * std::erfc(-u / std::numbers::sqrt2); }

/// Pools u = sqrt(N) psi_j over the columns of `vectors` and compares with the
/// standard normal law.
inline PorterThomasResult porter_thomas_test(const Eigen::Ref<const Eigen::MatrixXd>& vectors,
                                             const BinningPolicy& binning = {}) {
  if (vectors.size() == 0) throw std::invalid_argument("porter_thomas_test: no vectors");
  const double scale = std::sqrt(static_cast<double>(vectors.rows()));
  std::vector<double> u;
  u.reserve(static_cast<std::size_t>(vectors.size()));
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const double norm = vectors.col(c).norm();
    for (Eigen::Index j = 0; j < vectors.rows(); ++j) u.push_back(scale * vectors(j, c) / norm);
  }
  PorterThomasResult res;
  res.sample_count = u.size();
  res.ks = ks_statistic(u, standard_normal_cdf);
  res.amplitudes = make_histogram(std::move(u), binning, true);
  return res;
}

} // namespace erm
