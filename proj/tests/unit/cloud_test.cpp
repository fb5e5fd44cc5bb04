#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "erm/cloud.hpp"
#include "erm/stats.hpp"
#include "support/oracles.hpp"

using namespace erm;

TEST(SampleCloud, SameSeedGivesIdenticalPoints) {
  const auto a = sample_cloud(1, 7);
  const auto b = sample_cloud(1, 7);
  ASSERT_EQ(a.points.size(), 1u);
  EXPECT_EQ(a.points, b.points);
  EXPECT_EQ(a.n_atoms, 1u);
  EXPECT_EQ(a.seed, 7u);
  EXPECT_NE(sample_cloud(1, 8).points, a.points);
}

TEST(SampleCloud, RejectsEmptyCloud) { EXPECT_THROW(sample_cloud(0, 1), std::invalid_argument); }

TEST(SampleCloud, CoordinatesAreStandardNormal) {
  const auto c = sample_cloud(100000, 11);
  ASSERT_EQ(c.points.size(), c.n_atoms);
  for (int d = 0; d < 3; ++d) {
    std::vector<double> xs;
    for (const auto& p : c.points) xs.push_back(p[d]);
    const auto e = mean_estimate(xs);
    EXPECT_NEAR(e.mean, 0.0, 0.02);
    EXPECT_NEAR(e.std_dev * e.std_dev, 1.0, 0.03);
  }
}

TEST(SampleCloud, MeanSquaredPairDistanceIsSix) {
  // Quadrature of r^2 against the pair-distance density.
  const double oracle = oracle::integrate([](double r) { return r * r * pdf_pair_distance(r); }, 0.0, 30.0);
  EXPECT_NEAR(oracle, 6.0, 1e-10);

  const auto c = sample_cloud(100000, 12);
  std::mt19937_64 gen(3);
  std::uniform_int_distribution<std::size_t> pick(0, c.n_atoms - 1);
  double sum = 0.0;
  int count = 0;
  while (count < 100000) {
    const auto i = pick(gen), j = pick(gen);
    if (i == j) continue;
    const double d = distance(c.points[i], c.points[j]);
    sum += d * d;
    ++count;
  }
  EXPECT_NEAR(sum / count, 6.0, 0.1);
}

TEST(PairwiseDistances, OrderAndValues) {
  CloudSample c;
  c.points = {{0, 0, 0}, {3, 4, 0}, {0, 0, 0}, {1, 1, 1}};
  c.n_atoms = 4;
  const auto d = pairwise_distances(c);
  ASSERT_EQ(d.size(), 6u);
  EXPECT_DOUBLE_EQ(d[0], 5.0);           // (0,1)
  EXPECT_DOUBLE_EQ(d[1], 0.0);           // (0,2) coincident
  EXPECT_DOUBLE_EQ(d[2], std::sqrt(3.0)); // (0,3)
  EXPECT_DOUBLE_EQ(d[3], 5.0);           // (1,2)
  for (double x : d) EXPECT_GE(x, 0.0);
}

TEST(PdfPairDistance, ShapeAndNormalization) {
  EXPECT_EQ(pdf_pair_distance(0.0), 0.0);
  EXPECT_THROW(pdf_pair_distance(-1.0), std::invalid_argument);
  EXPECT_NEAR(oracle::integrate(pdf_pair_distance, 0.0, 30.0), 1.0, 1e-8);
  // Stationary point of r^2 exp(-r^2/4) is r = 2.
  EXPECT_GT(pdf_pair_distance(2.0), pdf_pair_distance(1.99));
  EXPECT_GT(pdf_pair_distance(2.0), pdf_pair_distance(2.01));
  // Agrees with the derivative of the chi-square(3) CDF.
  for (double r : {0.3, 1.0, 2.5, 5.0}) {
    const double h = 1e-5;
    const double deriv = (oracle::pair_distance_cdf(r + h) - oracle::pair_distance_cdf(r - h)) / (2 * h);
    EXPECT_NEAR(pdf_pair_distance(r), deriv, 1e-8);
  }
}

TEST(PdfPairDistance, MonteCarloKolmogorovSmirnov) {
  std::vector<double> d;
  d.reserve(1000000);
  Xoshiro256 gen(99);
  for (int i = 0; i < 1000000; ++i) d.push_back(distance(gaussian_point(gen), gaussian_point(gen)));
  EXPECT_LT(ks_statistic(d, oracle::pair_distance_cdf), 0.005);
}

TEST(PdfSharedVertex, SymmetryZeroAndErrors) {
  EXPECT_DOUBLE_EQ(pdf_shared_vertex(0.7, 2.1), pdf_shared_vertex(2.1, 0.7));
  EXPECT_EQ(pdf_shared_vertex(0.0, 1.3), 0.0);
  EXPECT_THROW(pdf_shared_vertex(-0.1, 1.0), std::invalid_argument);
  EXPECT_TRUE(std::isfinite(pdf_shared_vertex(29.0, 29.0)));
}

TEST(PdfSharedVertex, MarginalIsPairDistance) {
  for (double r : {0.5, 1.0, 2.0, 4.0}) {
    const double m = oracle::integrate([r](double r2) { return pdf_shared_vertex(r, r2); }, 0.0, 30.0);
    EXPECT_NEAR(m, pdf_pair_distance(r), 1e-6) << "r=" << r;
  }
  EXPECT_NEAR(oracle::integrate_2d(pdf_shared_vertex, 0.0, 30.0), 1.0, 1e-6);
}

TEST(PdfSharedVertex, MatchesSampledTriplesBinwise) {
  constexpr int kBins = 8;
  constexpr double kMax = 6.0;
  constexpr int kSamples = 100000;
  std::vector<double> counts(kBins * kBins, 0.0);
  Xoshiro256 gen(17);
  for (int s = 0; s < kSamples; ++s) {
    const auto i = gaussian_point(gen), j = gaussian_point(gen), l = gaussian_point(gen);
    const double a = distance(i, j), b = distance(i, l);
    if (a >= kMax || b >= kMax) continue;
    counts[static_cast<int>(a / kMax * kBins) * kBins + static_cast<int>(b / kMax * kBins)] += 1;
  }
  const double w = kMax / kBins;
  for (int x = 0; x < kBins; ++x)
    for (int y = 0; y < kBins; ++y) {
      const double p = oracle::integrate(
          [&](double a) {
            return oracle::integrate([&](double b) { return pdf_shared_vertex(a, b); }, y * w, (y + 1) * w, 1e-10);
          },
          x * w, (x + 1) * w, 1e-10);
      const double expected = p * kSamples;
      const double obs = counts[x * kBins + y];
      EXPECT_LE(std::abs(obs - expected), 4.0 * std::sqrt(std::max(expected, 1.0)))
          << "bin (" << x << "," << y << ")";
    }
}

TEST(PairDistances, DisjointPairsAreUncorrelated) {
  std::vector<double> a, b;
  Xoshiro256 gen(23);
  for (int s = 0; s < 100000; ++s) {
    a.push_back(distance(gaussian_point(gen), gaussian_point(gen)));
    b.push_back(distance(gaussian_point(gen), gaussian_point(gen)));
  }
  EXPECT_LT(std::abs(oracle::correlation(a, b)), 0.01);
}

TEST(JointLengthDensity, ErrorsAndZeroLimit) {
  EXPECT_THROW(joint_length_density(1.0, {}), std::invalid_argument);
  const std::vector<double> neg{-1.0};
  EXPECT_THROW(joint_length_density(1.0, neg), std::invalid_argument);
  const std::vector<double> one{1.5};
  EXPECT_EQ(joint_length_density(0.0, one), 0.0);
  EXPECT_NEAR(joint_length_density(1e-9, one), 0.0, 1e-12);
}

TEST(JointLengthDensity, MatchesClosedFormAwayFromLimits) {
  const double x0 = 0.8;
  const std::vector<double> r{0.5, 1.7, 2.2};
  const double k = 3.0;
  double expected = std::pow(2.0 / std::numbers::pi, (k + 1) / 2) * std::pow(x0, 2 - k) *
                    std::exp(-(k + 1) * x0 * x0 / 2);
  for (double ri : r) expected *= ri * std::exp(-ri * ri / 2) * std::sinh(x0 * ri);
  EXPECT_NEAR(joint_length_density(x0, r), expected, 1e-14 * expected + 1e-300);
}

TEST(JointLengthDensity, MarginalsReproduceDistanceDensities) {
  for (double r : {1.0, 2.0}) {
    const std::vector<double> len{r};
    const double m = oracle::integrate([&](double x0) { return joint_length_density(x0, len); }, 0.0, 30.0);
    EXPECT_NEAR(m, pdf_pair_distance(r), 1e-6);
  }
  const std::vector<double> two{1.0, 1.0};
  const double m2 = oracle::integrate([&](double x0) { return joint_length_density(x0, two); }, 0.0, 30.0);
  EXPECT_NEAR(m2, pdf_shared_vertex(1.0, 1.0), 1e-6);
  EXPECT_NEAR(oracle::integrate_2d([](double x0, double r) {
                const std::vector<double> l{r};
                return joint_length_density(x0, l);
              }, 0.0, 30.0),
              1.0, 1e-6);
}
