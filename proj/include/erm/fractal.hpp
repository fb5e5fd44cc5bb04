#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "erm/eigenvectors.hpp"
#include "erm/ensemble.hpp"
#include "erm/stats.hpp"

namespace erm {

/// Scaling of the mean inverse moment 1/M_q with N, fitted as N^{tau(q)}.
struct MomentScaling {
  int q = 2;
  std::vector<std::size_t> sizes;
  std::vector<double> inverse_moments; // mean over window vectors of 1/sum|psi|^{2q}
  double tau = 0.0;
  double tau_stderr = 0.0;
  double prefactor = 0.0; // exp(intercept): 1/M_q ~ prefactor * N^tau
  double fractal_dimension = 0.0;
  double fractal_dimension_stderr = 0.0;
};

/// Log-log regression of `inverse_moments` against `sizes`.
inline MomentScaling fit_moment_scaling(int q, std::span<const std::size_t> sizes,
                                        std::span<const double> inverse_moments) {
  if (q < 2) throw std::invalid_argument("fit_moment_scaling: q must be >= 2");
  if (sizes.size() != inverse_moments.size())
    throw std::invalid_argument("fit_moment_scaling: size mismatch");
  if (sizes.size() < 3) throw std::invalid_argument("fit_moment_scaling: need at least 3 sizes");
  std::vector<double> x, y;
  for (std::size_t k = 0; k < sizes.size(); ++k) {
    if (!(inverse_moments[k] > 0.0)) throw std::invalid_argument("fit_moment_scaling: moments must be > 0");
    x.push_back(std::log(static_cast<double>(sizes[k])));
    y.push_back(std::log(inverse_moments[k]));
  }
  const auto f = linear_fit(x, y);
  MomentScaling m;
  m.q = q;
  m.sizes.assign(sizes.begin(), sizes.end());
  m.inverse_moments.assign(inverse_moments.begin(), inverse_moments.end());
  m.tau = f.slope;
  m.tau_stderr = f.slope_stderr;
  m.prefactor = std::exp(f.intercept);
  m.fractal_dimension = f.slope / (q - 1);
  m.fractal_dimension_stderr = f.slope_stderr / (q - 1);
  return m;
}

enum class WindowSelector { superradiant_max, subradiant_max };

struct FractalScanConfig {
  WindowSelector window = WindowSelector::superradiant_max;
  std::vector<int> q_list{2, 3, 4, 5};
  std::vector<std::size_t> sizes{500, 1000, 2000, 4000, 8000};
  double b0 = 1.0;
  /// One entry per size, or a single entry used for every size.
  std::vector<std::size_t> realizations{4};
  std::uint64_t master_seed = 0;
  std::size_t workers = 1;
};

inline void validate(const FractalScanConfig& cfg) {
  if (cfg.sizes.size() < 3) throw std::invalid_argument("fractal_dimensions: need at least 3 sizes");
  const auto [mn, mx] = std::minmax_element(cfg.sizes.begin(), cfg.sizes.end());
  if (*mx < 4 * *mn) throw std::invalid_argument("fractal_dimensions: sizes must span a factor of 4");
  if (cfg.q_list.empty()) throw std::invalid_argument("fractal_dimensions: empty q list");
  for (int q : cfg.q_list)
    if (q < 2) throw std::invalid_argument("fractal_dimensions: q must be >= 2");
  if (cfg.realizations.size() != 1 && cfg.realizations.size() != cfg.sizes.size())
    throw std::invalid_argument("fractal_dimensions: realizations must have 1 or sizes.size() entries");
}

/// Per-size sums of inverse moments over the selected window of one realization.
struct WindowMomentSums {
  std::vector<double> inverse_sum; // per q
  std::size_t vectors = 0;
};

inline WindowMomentSums window_inverse_moments(const SpectrumResult& spec, WindowSelector sel,
                                               std::span<const int> q_list) {
  const auto peaks = locate_pr_maxima(pr_profile(spec));
  const auto& idx = sel == WindowSelector::superradiant_max ? peaks.superradiant.window
                                                            : peaks.subradiant.window;
  const auto vecs = select_columns(*spec.eigenvectors, idx);
  WindowMomentSums out;
  out.vectors = idx.size();
  for (int q : q_list) out.inverse_sum.push_back(mean_inverse_moment(vecs, q) * static_cast<double>(idx.size()));
  return out;
}

/// Simulates every size, averages 1/M_q over the PR-maximum window vectors of
/// all realizations, and fits tau(q) per q. Sizes use disjoint seed streams
/// derived from the master seed.
inline std::vector<MomentScaling> fractal_dimensions(const FractalScanConfig& cfg) {
  validate(cfg);
  std::vector<std::vector<double>> per_q(cfg.q_list.size());
  for (std::size_t k = 0; k < cfg.sizes.size(); ++k) {
    EnsembleSpec spec;
    spec.n_atoms = cfg.sizes[k];
    spec.b0 = cfg.b0;
    spec.realizations = cfg.realizations.size() == 1 ? cfg.realizations[0] : cfg.realizations[k];
    spec.master_seed = realization_seed(cfg.master_seed ^ 0x5f3759dfULL, k);
    spec.with_vectors = true;
    spec.workers = cfg.workers;
    const auto outcomes = map_ensemble(spec, [&](SpectrumResult&& s) {
      return window_inverse_moments(s, cfg.window, cfg.q_list);
    });
    std::vector<double> sums(cfg.q_list.size(), 0.0);
    std::size_t count = 0;
    for (const auto& o : outcomes) {
      if (!o.ok()) throw ComputationError(o.error, o.seed);
      for (std::size_t i = 0; i < sums.size(); ++i) sums[i] += o.value->inverse_sum[i];
      count += o.value->vectors;
    }
    for (std::size_t i = 0; i < sums.size(); ++i) per_q[i].push_back(sums[i] / static_cast<double>(count));
  }
  std::vector<MomentScaling> out;
  for (std::size_t i = 0; i < cfg.q_list.size(); ++i)
    out.push_back(fit_moment_scaling(cfg.q_list[i], cfg.sizes, per_q[i]));
  return out;
}

} // namespace erm
