#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "erm/stats.hpp"
#include "erm/unfolding.hpp"

using namespace erm;

namespace {

double mean_spacing(const UnfoldedSpectrum& u) {
  return (u.values.back() - u.values.front()) / static_cast<double>(u.values.size() - 1);
}

std::vector<double> sorted_uniform(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> u;
  std::vector<double> xs(n);
  for (auto& x : xs) x = u(gen);
  std::sort(xs.begin(), xs.end());
  return xs;
}

} // namespace

TEST(Unfold, EquallySpacedInputHasUnitSpacings) {
  std::vector<double> xs;
  for (int i = 1; i <= 100; ++i) xs.push_back(i);
  const auto u = unfold(xs);
  for (double s : spacings(u)) EXPECT_NEAR(s, 1.0, 1e-6);
  EXPECT_NE(u.method.find("polynomial"), std::string::npos);
}

TEST(Unfold, IdempotentOnUnitSpacedSequence) {
  std::vector<double> xs;
  for (int i = 0; i < 500; ++i) xs.push_back(3.5 + i);
  for (auto method : {UnfoldingMethod::polynomial, UnfoldingMethod::staircase}) {
    const auto u = unfold(xs, {method, 7});
    const auto s = spacings(u);
    for (double v : s) EXPECT_NEAR(v, 1.0, 1e-6);
  }
}

TEST(Unfold, PreservesOrderAndLengthWithUnitMeanSpacing) {
  const auto xs = sorted_uniform(2000, 1);
  for (auto method : {UnfoldingMethod::polynomial, UnfoldingMethod::staircase}) {
    const auto u = unfold(xs, {method, 7});
    ASSERT_EQ(u.values.size(), xs.size());
    EXPECT_TRUE(std::is_sorted(u.values.begin(), u.values.end()));
    EXPECT_NEAR(mean_spacing(u), 1.0, 1e-6);
    const auto s = spacings(u);
    for (double v : s) EXPECT_GE(v, 0.0);
  }
}

TEST(Unfold, UniformPointsGivePoissonSpacings) {
  const auto xs = sorted_uniform(10000, 2);
  const auto s = spacings(unfold(xs));
  EXPECT_LT(ks_statistic(s, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); }), 0.02);
}

TEST(Unfold, NonUniformDensityIsFlattened) {
  // Points with density proportional to 2x on [0, 1]: x = sqrt(u).
  auto xs = sorted_uniform(10000, 3);
  for (auto& x : xs) x = std::sqrt(x);
  std::sort(xs.begin(), xs.end());
  const auto s = spacings(unfold(xs));
  EXPECT_LT(ks_statistic(s, [](double x) { return x <= 0 ? 0.0 : 1.0 - std::exp(-x); }), 0.02);
}

TEST(Unfold, RejectsShortOrUnsortedInput) {
  std::vector<double> few(49);
  for (std::size_t i = 0; i < few.size(); ++i) few[i] = static_cast<double>(i);
  EXPECT_THROW(unfold(few), std::invalid_argument);
  std::vector<double> unsorted{3, 1, 2};
  EXPECT_THROW(unfold(unsorted), std::invalid_argument);
}

TEST(UnfoldEnsemble, CommonCountingFunctionAndPooledUnitSpacing) {
  std::vector<std::vector<double>> spectra;
  for (std::uint64_t seed = 10; seed < 15; ++seed) spectra.push_back(sorted_uniform(1000, seed));
  const auto us = unfold_ensemble(spectra, 0.2, 0.8);
  ASSERT_EQ(us.size(), 5u);
  double total = 0.0;
  std::size_t gaps = 0;
  for (const auto& u : us) {
    EXPECT_TRUE(std::is_sorted(u.values.begin(), u.values.end()));
    EXPECT_EQ(u.window_lo, 0.2);
    EXPECT_EQ(u.window_hi, 0.8);
    total += u.values.back() - u.values.front();
    gaps += u.values.size() - 1;
  }
  EXPECT_NEAR(total / static_cast<double>(gaps), 1.0, 1e-12);
}

TEST(Spacings, BasicCases) {
  UnfoldedSpectrum u;
  u.values = {0, 1, 2};
  EXPECT_EQ(spacings(u), (std::vector<double>{1, 1}));
  u.values = {5};
  EXPECT_THROW(spacings(u), std::invalid_argument);
}

TEST(CountingFunction, FallsBackToStaircaseWhenPolynomialIsNotMonotone) {
  // A cluster plus a gap makes a high-degree fit wiggle.
  std::vector<double> xs;
  for (int i = 0; i < 60; ++i) xs.push_back(i * 1e-3);
  xs.push_back(10.0);
  xs.push_back(10.001);
  const auto cf = CountingFunction::fit(xs, 1, {UnfoldingMethod::polynomial, 9});
  double prev = -1e300;
  for (double x : xs) {
    EXPECT_GE(cf(x), prev);
    prev = cf(x);
  }
  if (cf.method() == UnfoldingMethod::staircase)
    EXPECT_NE(cf.describe().find("not monotone"), std::string::npos);
}
