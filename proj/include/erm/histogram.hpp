#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

#include "json.hpp"

#include "erm/spectrum.hpp"
#include "erm/stats.hpp"

namespace erm {

struct Histogram {
  std::vector<double> bin_edges; // size = bins + 1, ascending
  std::vector<double> densities; // count / (sample_count * width) when normalized
  std::vector<std::size_t> counts;
  std::size_t sample_count = 0;
  bool normalized = true;

  std::size_t bins() const noexcept { return densities.size(); }
  double width(std::size_t i) const { return bin_edges[i + 1] - bin_edges[i]; }
  double center(std::size_t i) const { return 0.5 * (bin_edges[i] + bin_edges[i + 1]); }
};

/// Fixed-width binning. Unset fields fall back to Freedman-Diaconis on the
/// sample and to its observed range.
struct BinningPolicy {
  std::optional<double> width;
  std::optional<std::size_t> bins;
  std::optional<double> lower;
  std::optional<double> upper;
  std::size_t max_bins = 20000;
};

/// Freedman-Diaconis width 2 IQR n^{-1/3}; zero when the IQR vanishes.
inline double freedman_diaconis_width(std::span<const double> sorted) {
  if (sorted.size() < 2) return 0.0;
  const double iqr = sorted_quantile(sorted, 0.75) - sorted_quantile(sorted, 0.25);
  return 2.0 * iqr / std::cbrt(static_cast<double>(sorted.size()));
}

inline Histogram make_histogram(std::vector<double> values, const BinningPolicy& policy = {},
                                bool normalize = true) {
  if (values.empty()) throw std::invalid_argument("make_histogram: empty sample");
  std::sort(values.begin(), values.end());
  double lo = policy.lower.value_or(values.front());
  double hi = policy.upper.value_or(values.back());
  if (!(hi >= lo)) throw std::invalid_argument("make_histogram: upper < lower");

  std::size_t nbins = 1;
  if (policy.bins) {
    nbins = std::max<std::size_t>(1, *policy.bins);
  } else {
    const double w = policy.width.value_or(freedman_diaconis_width(values));
    if (w > 0.0 && hi > lo) nbins = static_cast<std::size_t>(std::ceil((hi - lo) / w));
    nbins = std::clamp<std::size_t>(nbins, 1, policy.max_bins);
  }
  if (hi == lo) {
    // Degenerate sample: one unit-width bin centered on the common value.
    lo -= 0.5;
    hi += 0.5;
    nbins = 1;
  }
  const double width = (hi - lo) / static_cast<double>(nbins);

  Histogram h;
  h.normalized = normalize;
  h.bin_edges.resize(nbins + 1);
  for (std::size_t i = 0; i <= nbins; ++i) h.bin_edges[i] = lo + width * static_cast<double>(i);
  h.bin_edges.back() = hi;
  h.counts.assign(nbins, 0);
  for (double v : values) {
    if (v < lo || v > hi) continue;
    auto idx = static_cast<std::size_t>((v - lo) / width);
    if (idx >= nbins) idx = nbins - 1;
    ++h.counts[idx];
    ++h.sample_count;
  }
  h.densities.resize(nbins);
  for (std::size_t i = 0; i < nbins; ++i) {
    const double c = static_cast<double>(h.counts[i]);
    h.densities[i] = normalize ? c / (static_cast<double>(h.sample_count) * h.width(i)) : c;
  }
  return h;
}

/// Pooled, normalized histogram of all eigenvalues of an ensemble sharing (N, b0).
inline Histogram eigenvalue_histogram(std::span<const SpectrumResult> specs,
                                      const BinningPolicy& policy = {}) {
  if (specs.empty()) throw std::invalid_argument("eigenvalue_histogram: empty ensemble");
  std::vector<double> pooled;
  for (const auto& s : specs) {
    if (s.n_atoms != specs.front().n_atoms || s.cooperativeness != specs.front().cooperativeness ||
        s.kind != specs.front().kind)
      throw std::invalid_argument("eigenvalue_histogram: ensemble mixes (N, b0) parameters");
    pooled.insert(pooled.end(), s.eigenvalues.begin(), s.eigenvalues.end());
  }
  return make_histogram(std::move(pooled), policy, true);
}

inline void write_histogram_csv(std::ostream& os, const Histogram& h) {
  os << "bin_left,bin_right,density\n";
  os.precision(17);
  for (std::size_t i = 0; i < h.bins(); ++i)
    os << h.bin_edges[i] << ',' << h.bin_edges[i + 1] << ',' << h.densities[i] << '\n';
}

inline nlohmann::json histogram_to_json(const Histogram& h) {
  return {{"bin_edges", h.bin_edges},
          {"densities", h.densities},
          {"counts", h.counts},
          {"sample_count", h.sample_count},
          {"normalized", h.normalized}};
}

inline Histogram histogram_from_json(const nlohmann::json& j) {
  Histogram h;
  j.at("bin_edges").get_to(h.bin_edges);
  j.at("densities").get_to(h.densities);
  j.at("counts").get_to(h.counts);
  j.at("sample_count").get_to(h.sample_count);
  j.at("normalized").get_to(h.normalized);
  return h;
}

} // namespace erm
