#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

#include "erm/cloud.hpp"
#include "erm/errors.hpp"

namespace erm {

/// sin(x)/x with sinc(0) = 1; Taylor branch below 1e-4.
inline double sinc(double x) noexcept {
  if (std::abs(x) < 1e-4) {
    const double x2 = x * x;
    return 1.0 - x2 / 6.0 + x2 * x2 / 120.0;
  }
  return std::sin(x) / x;
}

/// Decay-rate matrix S_ij = sinc(sqrt(M) |x_i - x_j|) with M = N / b0.
struct DecayMatrix {
  Eigen::MatrixXd entries;
  std::size_t n_atoms = 0;
  double mode_count = 0.0;     // M
  double cooperativeness = 0.0; // b0
  std::uint64_t seed = 0;      // seed of the source cloud
};

/// Q = sqrt(2 / (3 b0)) (S - I).
struct CenteredMatrix {
  Eigen::MatrixXd entries;
  double cooperativeness = 0.0;
  std::uint64_t seed = 0;
};

namespace detail {

inline void check_finite(const CloudSample& cloud) {
  for (const auto& p : cloud.points)
    for (double c : p)
      if (!std::isfinite(c)) throw DataError("build_decay_matrix: non-finite atom coordinate");
}

inline DecayMatrix fill_decay_matrix(const CloudSample& cloud, double mode_count, double b0) {
  check_finite(cloud);
  const auto n = static_cast<Eigen::Index>(cloud.points.size());
  const double k = std::sqrt(mode_count);
  DecayMatrix s;
  s.entries.resize(n, n);
  s.n_atoms = cloud.points.size();
  s.mode_count = mode_count;
  s.cooperativeness = b0;
  s.seed = cloud.seed;
  for (Eigen::Index j = 0; j < n; ++j) {
    s.entries(j, j) = 1.0;
    for (Eigen::Index i = j + 1; i < n; ++i) {
      const double v = sinc(k * distance(cloud.points[i], cloud.points[j]));
      s.entries(i, j) = v;
      s.entries(j, i) = v;
    }
  }
  return s;
}

} // namespace detail

/// Builds S in the fixed-cooperativeness scaling, M = N / b0.
inline DecayMatrix build_decay_matrix(const CloudSample& cloud, double b0) {
  if (!(b0 > 0.0) || !std::isfinite(b0))
    throw std::invalid_argument("build_decay_matrix: b0 must be a positive finite number");
  const double n = static_cast<double>(cloud.points.size());
  return detail::fill_decay_matrix(cloud, n / b0, b0);
}

/// Builds S for an explicit mode count M; b0 is recorded as N / M.
inline DecayMatrix build_decay_matrix_from_modes(const CloudSample& cloud, double mode_count) {
  if (!(mode_count > 0.0) || !std::isfinite(mode_count))
    throw std::invalid_argument("build_decay_matrix_from_modes: M must be a positive finite number");
  const double n = static_cast<double>(cloud.points.size());
  return detail::fill_decay_matrix(cloud, mode_count, n / mode_count);
}

inline CenteredMatrix build_centered_matrix(const DecayMatrix& s) {
  const double scale = std::sqrt(2.0 / (3.0 * s.cooperativeness));
  CenteredMatrix q;
  q.cooperativeness = s.cooperativeness;
  q.seed = s.seed;
  q.entries = scale * s.entries;
  q.entries.diagonal().setZero();
  return q;
}

// Binary dump: little-endian u64 N, f64 b0, then N*N f64 in row-major order.

namespace detail {

constexpr std::uint64_t to_little_endian(std::uint64_t v) noexcept {
  if constexpr (std::endian::native == std::endian::little) return v;
  std::uint64_t out = 0;
  for (int i = 0; i < 8; ++i) out |= ((v >> (8 * i)) & 0xffULL) << (8 * (7 - i));
  return out;
}

template <class T>
void write_le(std::ostream& os, T value) {
  static_assert(sizeof(T) == 8);
  std::uint64_t bits;
  std::memcpy(&bits, &value, 8);
  bits = to_little_endian(bits);
  char buf[8];
  std::memcpy(buf, &bits, 8);
  os.write(buf, 8);
}

template <class T>
T read_le(std::istream& is) {
  char buf[8];
  if (!is.read(buf, 8)) throw DataError("decay matrix dump: truncated input");
  std::uint64_t bits;
  std::memcpy(&bits, buf, 8);
  bits = to_little_endian(bits);
  T value;
  std::memcpy(&value, &bits, 8);
  return value;
}

} // namespace detail

inline void write_decay_matrix(std::ostream& os, const DecayMatrix& s) {
  const auto n = s.entries.rows();
  detail::write_le<std::uint64_t>(os, static_cast<std::uint64_t>(n));
  detail::write_le<double>(os, s.cooperativeness);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) detail::write_le<double>(os, s.entries(i, j));
}

inline DecayMatrix read_decay_matrix(std::istream& is) {
  const auto n = detail::read_le<std::uint64_t>(is);
  const auto b0 = detail::read_le<double>(is);
  if (n == 0 || n > (1ULL << 20)) throw DataError("decay matrix dump: implausible size");
  DecayMatrix s;
  s.n_atoms = n;
  s.cooperativeness = b0;
  s.mode_count = static_cast<double>(n) / b0;
  const auto en = static_cast<Eigen::Index>(n);
  s.entries.resize(en, en);
  for (Eigen::Index i = 0; i < en; ++i)
    for (Eigen::Index j = 0; j < en; ++j) s.entries(i, j) = detail::read_le<double>(is);
  return s;
}

inline void write_decay_matrix(const std::filesystem::path& path, const DecayMatrix& s) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot open " + path.string() + " for writing");
  write_decay_matrix(os, s);
  if (!os) throw IoError("failed writing " + path.string());
}

inline DecayMatrix read_decay_matrix(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open " + path.string());
  return read_decay_matrix(is);
}

} // namespace erm
