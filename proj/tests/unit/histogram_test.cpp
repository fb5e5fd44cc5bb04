#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "erm/ensemble.hpp"
#include "erm/histogram.hpp"

using namespace erm;

TEST(MakeHistogram, NormalizedDensitiesIntegrateToOne) {
  std::mt19937_64 gen(1);
  std::normal_distribution<double> g;
  std::vector<double> xs(5000);
  for (auto& x : xs) x = g(gen);
  const auto h = make_histogram(xs);
  double total = 0.0;
  for (std::size_t i = 0; i < h.bins(); ++i) total += h.densities[i] * h.width(i);
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(h.sample_count, 5000u);
  EXPECT_TRUE(std::is_sorted(h.bin_edges.begin(), h.bin_edges.end()));
}

TEST(MakeHistogram, FreedmanDiaconisWidth) {
  std::vector<double> xs;
  for (int i = 0; i <= 1000; ++i) xs.push_back(i / 1000.0);
  // IQR = 0.5, n = 1001
  EXPECT_NEAR(freedman_diaconis_width(xs), 2.0 * 0.5 / std::cbrt(1001.0), 1e-12);
  const auto h = make_histogram(xs);
  EXPECT_EQ(h.bins(), static_cast<std::size_t>(std::ceil(1.0 / freedman_diaconis_width(xs))));
}

TEST(MakeHistogram, OverridesAndRangeLimits) {
  std::vector<double> xs{0.1, 0.2, 0.25, 0.9, 1.5};
  BinningPolicy p;
  p.bins = 4;
  p.lower = 0.0;
  p.upper = 1.0;
  const auto h = make_histogram(xs, p);
  ASSERT_EQ(h.bins(), 4u);
  EXPECT_EQ(h.counts, (std::vector<std::size_t>{2, 1, 0, 1})); // 0.25 opens the second bin
  EXPECT_EQ(h.sample_count, 4u); // 1.5 falls outside
  BinningPolicy w;
  w.width = 0.5;
  EXPECT_EQ(make_histogram(xs, w).bins(), 3u);
  const auto raw = make_histogram(xs, p, false);
  EXPECT_FALSE(raw.normalized);
  EXPECT_EQ(raw.densities[0], 2.0);
}

TEST(MakeHistogram, DegenerateAndInvalid) {
  const auto h = make_histogram({1.0, 1.0, 1.0});
  ASSERT_EQ(h.bins(), 1u);
  EXPECT_LE(h.bin_edges[0], 1.0);
  EXPECT_GE(h.bin_edges[1], 1.0);
  EXPECT_THROW(make_histogram({}), std::invalid_argument);
  BinningPolicy p;
  p.lower = 1.0;
  p.upper = 0.0;
  EXPECT_THROW(make_histogram({0.5}, p), std::invalid_argument);
}

TEST(EigenvalueHistogram, IdentitySpectrumPutsAllMassAtOne) {
  SpectrumResult s;
  s.eigenvalues = std::vector<double>(10, 1.0);
  s.n_atoms = 10;
  s.cooperativeness = 1.0;
  const std::vector<SpectrumResult> specs{s};
  const auto h = eigenvalue_histogram(specs);
  std::size_t with_mass = 0;
  for (std::size_t i = 0; i < h.bins(); ++i)
    if (h.counts[i] > 0) {
      ++with_mass;
      EXPECT_LE(h.bin_edges[i], 1.0);
      EXPECT_GE(h.bin_edges[i + 1], 1.0);
      EXPECT_EQ(h.counts[i], 10u);
    }
  EXPECT_EQ(with_mass, 1u);
}

TEST(EigenvalueHistogram, RejectsMixedParameters) {
  SpectrumResult a, b;
  a.eigenvalues = b.eigenvalues = {1.0};
  a.n_atoms = 1;
  b.n_atoms = 1;
  a.cooperativeness = 1.0;
  b.cooperativeness = 2.0;
  const std::vector<SpectrumResult> specs{a, b};
  EXPECT_THROW(eigenvalue_histogram(specs), std::invalid_argument);
  EXPECT_THROW(eigenvalue_histogram(std::vector<SpectrumResult>{}), std::invalid_argument);
}

namespace {

std::vector<SpectrumResult> ensemble(std::size_t n, double b0, std::size_t r, std::uint64_t seed) {
  EnsembleSpec spec;
  spec.n_atoms = n;
  spec.b0 = b0;
  spec.realizations = r;
  spec.master_seed = seed;
  return successful_spectra(simulate_ensemble(spec));
}

} // namespace

TEST(EigenvalueHistogram, ScalingCollapseAcrossSizes) {
  // Same b0, different N: pooled densities agree bin-wise within 5 standard errors.
  BinningPolicy p;
  p.lower = 0.0;
  p.upper = 3.0;
  p.bins = 15;
  const auto small = eigenvalue_histogram(ensemble(300, 1.0, 20, 5), p);
  const auto large = eigenvalue_histogram(ensemble(1000, 1.0, 6, 6), p);
  for (std::size_t i = 0; i < p.bins; ++i) {
    const double w = small.width(i);
    const double se_s = std::sqrt(static_cast<double>(small.counts[i]) + 1.0) / (small.sample_count * w);
    const double se_l = std::sqrt(static_cast<double>(large.counts[i]) + 1.0) / (large.sample_count * w);
    EXPECT_LE(std::abs(small.densities[i] - large.densities[i]), 5.0 * std::hypot(se_s, se_l)) << "bin " << i;
  }
}

TEST(EigenvalueHistogram, LargeCooperativenessAccumulatesNearZero) {
  // Reference run: 1000 atoms, b0 = 10, 3 realizations gave a fraction of about 0.66.
  std::size_t below = 0, total = 0;
  for (const auto& s : ensemble(1000, 10.0, 3, 7)) {
    for (double l : s.eigenvalues) below += l < 0.5;
    total += s.size();
  }
  EXPECT_GE(static_cast<double>(below) / static_cast<double>(total), 0.5);
}

TEST(HistogramIo, CsvHeaderAndJsonRoundTrip) {
  const auto h = make_histogram({0.1, 0.4, 0.45, 0.8});
  std::ostringstream os;
  write_histogram_csv(os, h);
  const auto text = os.str();
  EXPECT_EQ(text.substr(0, text.find('\n')), "bin_left,bin_right,density");
  EXPECT_EQ(static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')), h.bins() + 1);
  const auto back = histogram_from_json(histogram_to_json(h));
  EXPECT_EQ(back.bin_edges, h.bin_edges);
  EXPECT_EQ(back.densities, h.densities);
  EXPECT_EQ(back.counts, h.counts);
  EXPECT_EQ(back.sample_count, h.sample_count);
}
