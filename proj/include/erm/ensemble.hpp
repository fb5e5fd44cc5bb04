#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <exception>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

#include "erm/cloud.hpp"
#include "erm/decay_matrix.hpp"
#include "erm/random.hpp"
#include "erm/spectrum.hpp"

namespace erm {

/// Parameters of one ensemble of decay matrices. Exactly one of b0 and
/// mode_count is set.
struct EnsembleSpec {
  std::size_t n_atoms = 0;
  std::optional<double> b0;
  std::optional<double> mode_count;
  std::size_t realizations = 1;
  std::uint64_t master_seed = 0;
  bool with_vectors = false;
  bool centered = false; // diagonalize Q instead of S
  std::size_t workers = 1;
};

template <class T>
struct RealizationOutcome {
  std::size_t index = 0;
  std::uint64_t seed = 0;
  std::optional<T> value;
  std::string error;
  double build_seconds = 0.0;
  double solve_seconds = 0.0;

  bool ok() const noexcept { return value.has_value(); }
};

/// Worker count from ERM_SPECTRA_WORKERS, else the hardware concurrency.
inline std::size_t default_worker_count() {
  if (const char* env = std::getenv("ERM_SPECTRA_WORKERS")) {
    try {
      const long v = std::stol(env);
      if (v > 0) return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
    }
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

inline void validate(const EnsembleSpec& spec) {
  if (spec.n_atoms == 0) throw std::invalid_argument("ensemble: n_atoms must be >= 1");
  if (spec.realizations == 0) throw std::invalid_argument("ensemble: realizations must be >= 1");
  if (spec.workers == 0) throw std::invalid_argument("ensemble: workers must be >= 1");
  if (spec.b0.has_value() == spec.mode_count.has_value())
    throw std::invalid_argument("ensemble: exactly one of b0 and M must be set");
  if (spec.b0 && !(*spec.b0 > 0.0)) throw std::invalid_argument("ensemble: b0 must be > 0");
  if (spec.mode_count && !(*spec.mode_count > 0.0))
    throw std::invalid_argument("ensemble: M must be > 0");
}

inline DecayMatrix build_realization_matrix(const EnsembleSpec& spec, std::uint64_t seed) {
  const auto cloud = sample_cloud(spec.n_atoms, seed);
  return spec.b0 ? build_decay_matrix(cloud, *spec.b0)
                 : build_decay_matrix_from_modes(cloud, *spec.mode_count);
}

/// Builds and diagonalizes every realization, passing each spectrum to
/// `reduce`; results come back in realization order regardless of which
/// worker finished first. Failures are recorded per realization.
template <class Reduce>
auto map_ensemble(const EnsembleSpec& spec, Reduce&& reduce)
    -> std::vector<RealizationOutcome<std::invoke_result_t<Reduce&, SpectrumResult&&>>> {
  using T = std::invoke_result_t<Reduce&, SpectrumResult&&>;
  validate(spec);
  std::vector<RealizationOutcome<T>> out(spec.realizations);
  std::atomic<std::size_t> next{0};

  auto work = [&] {
    for (std::size_t i = next++; i < spec.realizations; i = next++) {
      auto& slot = out[i];
      slot.index = i;
      slot.seed = realization_seed(spec.master_seed, i);
      try {
        const auto t0 = std::chrono::steady_clock::now();
        auto s = build_realization_matrix(spec, slot.seed);
        const auto t1 = std::chrono::steady_clock::now();
        SpectrumResult r = spec.centered ? eigendecompose(build_centered_matrix(s), spec.with_vectors)
                                         : eigendecompose(s, spec.with_vectors);
        const auto t2 = std::chrono::steady_clock::now();
        slot.build_seconds = std::chrono::duration<double>(t1 - t0).count();
        slot.solve_seconds = std::chrono::duration<double>(t2 - t1).count();
        slot.value.emplace(reduce(std::move(r)));
      } catch (const std::exception& e) {
        slot.error = e.what();
      }
    }
  };

  const std::size_t workers = std::min(spec.workers, spec.realizations);
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  return out;
}

/// Spectra of every realization (eigenvectors only if requested in `spec`).
inline std::vector<RealizationOutcome<SpectrumResult>> simulate_ensemble(const EnsembleSpec& spec) {
  return map_ensemble(spec, [](SpectrumResult&& s) { return std::move(s); });
}

/// Successful spectra in realization order; throws if any realization failed.
inline std::vector<SpectrumResult> successful_spectra(std::vector<RealizationOutcome<SpectrumResult>>&& outcomes) {
  std::vector<SpectrumResult> out;
  out.reserve(outcomes.size());
  for (auto& o : outcomes) {
    if (!o.ok()) throw ComputationError(o.error, o.seed);
    out.push_back(std::move(*o.value));
  }
  return out;
}

} // namespace erm
