#pragma once

#include <algorithm>
#include <optional>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "erm/spectrum.hpp"
#include "erm/stats.hpp"
#include "erm/surmise.hpp"
#include "erm/unfolding.hpp"

namespace erm {

struct ScanOptions {
  std::size_t window_size = 1000; // eigenvalues per realization in each window
  UnfoldingOptions unfolding{};
  SurmiseFitOptions fit{};
  /// Windows whose reduced chi-square exceeds this are flagged as not
  /// described by the surmise family.
  double goodness_threshold = 3.0;
};

struct WindowFit {
  double center = 0.0; // median pooled eigenvalue in the window
  double lo = 0.0;
  double hi = 0.0;
  std::size_t spacing_count = 0;
  std::optional<SurmiseFit> fit;
  bool flagged = false;
  std::string note; // reason for the flag, empty when the fit is good
};

/// Pooled spacings of all realizations inside [lo, hi], each realization
/// unfolded with the common ensemble counting function.
inline std::vector<double> window_spacings(std::span<const SpectrumResult> specs, double lo, double hi,
                                           const UnfoldingOptions& opts = {}) {
  std::vector<std::vector<double>> values;
  values.reserve(specs.size());
  for (const auto& s : specs) values.push_back(s.eigenvalues);
  const auto unfolded = unfold_ensemble(values, lo, hi, opts);
  std::vector<double> out;
  for (const auto& u : unfolded)
    if (u.values.size() >= 2) {
      const auto s = spacings(u);
      out.insert(out.end(), s.begin(), s.end());
    }
  return out;
}

inline std::vector<double> pooled_sorted_eigenvalues(std::span<const SpectrumResult> specs) {
  std::vector<double> pooled;
  for (const auto& s : specs) pooled.insert(pooled.end(), s.eigenvalues.begin(), s.eigenvalues.end());
  std::sort(pooled.begin(), pooled.end());
  return pooled;
}

/// Eigenvalue range holding on average `window_size` eigenvalues per
/// realization, centered (by pooled rank) on the pooled median.
inline std::pair<double, double> central_window(std::span<const SpectrumResult> specs,
                                                std::size_t window_size) {
  const auto pooled = pooled_sorted_eigenvalues(specs);
  const std::size_t len = std::min(pooled.size(), window_size * specs.size());
  if (len < 2) throw std::invalid_argument("central_window: window too small");
  const std::size_t start = (pooled.size() - len) / 2;
  return {pooled[start], pooled[start + len - 1]};
}

/// Slides windows of `window_size` eigenvalues per realization across the
/// pooled spectrum by half a window; each window is unfolded on its own and
/// fitted with the surmise family.
inline std::vector<WindowFit> windowed_surmise_scan(std::span<const SpectrumResult> specs,
                                                    const ScanOptions& opts = {}) {
  if (specs.empty()) throw std::invalid_argument("windowed_surmise_scan: empty ensemble");
  const std::size_t n = specs.front().size();
  if (opts.window_size < 2 || opts.window_size > n)
    throw std::invalid_argument("windowed_surmise_scan: window_size must be in [2, N]");

  const auto pooled = pooled_sorted_eigenvalues(specs);
  const std::size_t len = opts.window_size * specs.size();
  const std::size_t step = std::max<std::size_t>(1, len / 2);

  std::vector<WindowFit> out;
  for (std::size_t start = 0; start + len <= pooled.size(); start += step) {
    WindowFit w;
    w.lo = pooled[start];
    w.hi = pooled[start + len - 1];
    w.center = sorted_quantile(std::span(pooled).subspan(start, len), 0.5);
    try {
      const auto sp = window_spacings(specs, w.lo, w.hi, opts.unfolding);
      w.spacing_count = sp.size();
      w.fit = fit_surmise(sp, opts.fit);
      if (!(w.fit->goodness <= opts.goodness_threshold)) {
        w.flagged = true;
        w.note = "poor fit";
      }
    } catch (const std::exception& e) {
      w.flagged = true;
      w.note = e.what();
    }
    out.push_back(std::move(w));
  }
  return out;
}

inline void write_scan_csv(std::ostream& os, std::span<const WindowFit> scan) {
  os << "window_center,q,q_err,r,r_err,goodness,flag\n";
  os.precision(10);
  for (const auto& w : scan) {
    os << w.center << ',';
    if (w.fit)
      os << w.fit->q << ',' << w.fit->q_err() << ',' << w.fit->r << ',' << w.fit->r_err() << ','
         << w.fit->goodness << ',';
    else
      os << "nan,nan,nan,nan,nan,";
    os << (w.flagged ? (w.fit ? "poor_fit" : "fit_failed") : "ok") << '\n';
  }
}

} // namespace erm
