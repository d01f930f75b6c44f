#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "chaosavg/error.hpp"
#include "chaosavg/field.hpp"
#include "chaosavg/parallel.hpp"
#include "chaosavg/rng.hpp"
#include "chaosavg/stats.hpp"

using namespace chaosavg;

namespace {

GridSpec grid1(double L, double h) {
  GridSpec g;
  g.d = 1;
  g.half_extent = L;
  g.spacing = h;
  return g;
}

}  // namespace

TEST(Grid, Geometry) {
  const auto g = grid1(2.0, 0.5);
  EXPECT_EQ(g.points_per_axis(), 9);
  EXPECT_EQ(g.sites(), 9u);
  EXPECT_DOUBLE_EQ(g.coord(0), -2.0);
  GridSpec g2;
  g2.d = 2;
  g2.half_extent = 1.0;
  g2.spacing = 0.5;
  EXPECT_EQ(g2.sites(), 25u);
  const int idx[] = {3, 1};
  EXPECT_EQ(g2.unflatten(g2.flat(idx)), (std::vector<int>{3, 1}));
  EXPECT_NEAR(g2.norm_of_site(g2.flat(idx)), std::hypot(0.5, -0.5), 1e-15);
}

TEST(Grid, RejectsNonIntegerRatio) { EXPECT_THROW(grid1(1.0, 0.3).validate(), Error); }

TEST(Circulant, FullCovarianceMatrixWithinFiveSE) {
  // 21 sites, 5000 replications, elementwise 5-SE test of the sample covariance against gamma.
  const auto model = CovarianceModel::exponential(1, 1.0);
  const auto g = grid1(5.0, 0.5);
  ASSERT_EQ(g.sites(), 21u);
  CirculantSampler sampler(model, g);
  const int n = 5000;
  const std::size_t m = g.sites();
  std::vector<double> sum(m * m, 0.0), sum2(m * m, 0.0);
  for (int r = 0; r < n; ++r) {
    const auto s = sampler.sample(derive_seed(11, r));
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        const double p = s.values[i] * s.values[j];
        sum[i * m + j] += p;
        sum2[i * m + j] += p * p;
      }
    }
  }
  int outside = 0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double mean = sum[i * m + j] / n;
      const double var = sum2[i * m + j] / n - mean * mean;
      const double se = std::sqrt(var / n);
      const double target = model.gamma_radial(std::abs(g.coord(i) - g.coord(j)));
      if (std::abs(mean - target) > 5.0 * se) ++outside;
    }
  }
  EXPECT_EQ(outside, 0);
}

TEST(Circulant, SameSeedSameSample) {
  CirculantSampler sampler(CovarianceModel::gaussian(1), grid1(10.0, 0.25));
  const auto a = sampler.sample(42);
  const auto b = sampler.sample(42);
  const auto c = sampler.sample(43);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NE(a.values, c.values);
  EXPECT_EQ(a.seed, 42u);
}

TEST(Circulant, RejectsRiesz) { EXPECT_THROW(CirculantSampler(CovarianceModel::riesz(1, 0.5), grid1(5.0, 0.5)), Error); }

TEST(Circulant, ReportsNegativeEigenvalues) {
  // A no-padding budget cannot embed the wide gaussian on a short grid.
  CirculantOptions opt;
  opt.max_padding_factor = 1;
  try {
    CirculantSampler(CovarianceModel::gaussian(1, 3.0), grid1(2.0, 0.1), opt);
    SUCCEED() << "embedding happened to be nonnegative";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::sampler_failure);
    EXPECT_NE(std::string(e.what()).find("eigenvalue"), std::string::npos);
  }
}

TEST(Spectral, MarginalNormality) {
  const auto g = grid1(5.0, 0.5);
  SpectralSampler sampler(CovarianceModel::gaussian(1), g, 12.0, 400);
  std::vector<double> y;
  const std::size_t centre = g.sites() / 2;
  for (int r = 0; r < 5000; ++r) y.push_back(sampler.sample(derive_seed(3, r)).values[centre]);
  const double sd = std::sqrt(1.0 - sampler.truncation_bias());
  EXPECT_GT(ks_normal(y, 0.0, sd).p_value, 0.01);
}

TEST(Spectral, StationaryCovariance) {
  // Covariance at one lag from three translated site pairs agrees within 5 SE.
  const auto g = grid1(5.0, 0.5);
  SpectralSampler sampler(CovarianceModel::exponential(1), g, 40.0, 2000);
  const int n = 4000;
  const int lag = 2;
  const int starts[] = {2, 8, 14};
  std::vector<double> est, se;
  std::vector<std::vector<double>> prods(3);
  for (int r = 0; r < n; ++r) {
    const auto s = sampler.sample(derive_seed(5, r));
    for (int k = 0; k < 3; ++k) prods[k].push_back(s.values[starts[k]] * s.values[starts[k] + lag]);
  }
  for (int k = 0; k < 3; ++k) {
    const auto m = moments(prods[k]);
    est.push_back(m.mean);
    se.push_back(m.mean_se);
  }
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) EXPECT_LT(std::abs(est[a] - est[b]), 5.0 * std::hypot(se[a], se[b]));
  }
  const double lag_x[] = {lag * g.spacing};
  EXPECT_LT(std::abs(est[0] - sampler.covariance(lag_x)), 5.0 * se[0]);
}

TEST(Spectral, RieszNeedsCutoff) {
  EXPECT_THROW(SpectralSampler(CovarianceModel::riesz(1, 0.5), grid1(5.0, 0.5), 0.0, 100), Error);
  SpectralSampler ok(CovarianceModel::riesz(1, 0.5), grid1(5.0, 0.5), 10.0, 200);
  EXPECT_TRUE(std::isinf(ok.truncation_bias()));
}

TEST(Spectral, TwoDimensionalVariance) {
  GridSpec g;
  g.d = 2;
  g.half_extent = 2.0;
  g.spacing = 0.5;
  SpectralSampler sampler(CovarianceModel::gaussian(2), g, 8.0, 32);
  const double zero[] = {0.0, 0.0};
  EXPECT_NEAR(sampler.covariance(zero), 1.0 - sampler.truncation_bias(), 1e-12);
  EXPECT_LT(sampler.truncation_bias(), 1e-6);
}

TEST(Sampling, IndependentOfThreadCount) {
  const auto g = grid1(20.0, 0.25);
  CirculantSampler sampler(CovarianceModel::gaussian(1), g);
  set_thread_count(1);
  const auto a = sampler.sample(9);
  set_thread_count(4);
  const auto b = sampler.sample(9);
  set_thread_count(0);
  EXPECT_EQ(a.values, b.values);
}

TEST(Csv, HeaderAndRows) {
  const auto s = sample_circulant(CovarianceModel::gaussian(1), grid1(1.0, 0.5), 1);
  const std::string csv = field_to_csv(s);
  EXPECT_EQ(csv.rfind("# {", 0), 0u);
  EXPECT_NE(csv.find("site,value\n"), std::string::npos);
}
