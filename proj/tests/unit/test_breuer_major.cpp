#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "chaosavg/breuer_major.hpp"
#include "chaosavg/error.hpp"
#include "chaosavg/parallel.hpp"

using namespace chaosavg;

namespace {

GridSpec grid1(double L, double h) {
  GridSpec g;
  g.half_extent = L;
  g.spacing = h;
  return g;
}

}  // namespace

TEST(SpatialAverage, ConstantField) {
  const auto g = grid1(10.0, 0.5);
  std::vector<double> ones(g.sites(), 1.0);
  // Sites with |x| <= 3: -3, -2.5, ..., 3 (13 sites).
  EXPECT_NEAR(spatial_average(ones, g, 3.0), 13 * 0.5, 1e-12);
  EXPECT_THROW(spatial_average(ones, g, 11.0), Error);
}

TEST(LimitVariance, HermiteTwoGaussian) {
  // omega_1 * 2! * int exp(-2 x^2) = 4 sqrt(pi / 2).
  const double v = limit_variance_bm(CovarianceModel::gaussian(1), HermiteSeries({{2, 1.0}}));
  EXPECT_NEAR(v, 4.0 * std::sqrt(M_PI / 2.0), 1e-9);
  EXPECT_NEAR(v, 5.0133, 1e-4);
}

TEST(LimitVariance, SeriesAddsTerms) {
  const auto m = CovarianceModel::exponential(1, 1.0);
  // int exp(-q |x|) = 2 / q.
  const double v = limit_variance_bm(m, HermiteSeries({{1, 1.0}, {3, 0.5}}));
  EXPECT_NEAR(v, 2.0 * (1.0 * 1.0 * 2.0 + 0.25 * 6.0 * 2.0 / 3.0), 1e-9);
}

TEST(LimitVariance, RieszRankTwoRejected) {
  try {
    limit_variance_bm(CovarianceModel::riesz(1, 0.5), HermiteSeries({{2, 1.0}}));
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invalid_argument);
  }
}

TEST(TwoRoutes, AgreeForOrdersOneAndTwo) {
  const auto model = CovarianceModel::gaussian(1);
  const auto mu = SpectralMeasure::from_model(model);
  const auto axis = Axis::trapezoid(0.0, 1.0, 33);
  const std::vector<double> e(axis.size(), 1.0);
  for (int p = 1; p <= 2; ++p) {
    const auto kv = limit_variance_kernel({DiscreteKernel::tensor_power(axis, e, p)}, model);
    const auto sv = var_spectral(SpectralKernel::indicator_power(p, 0.0, 1.0), mu, 50.0);
    EXPECT_NEAR(kv.sigma2 / sv.limit, 1.0, 0.01) << "p = " << p;
    EXPECT_GE(kv.sigma2_abs, kv.sigma2 * (1.0 - 1e-12));
  }
}

TEST(TwoRoutes, FiniteRVarianceApproachesLimit) {
  const auto mu = SpectralMeasure::from_model(CovarianceModel::gaussian(1));
  const auto k = SpectralKernel::indicator_power(1, 0.0, 1.0);
  const auto a = var_spectral(k, mu, 5.0);
  const auto b = var_spectral(k, mu, 50.0);
  const double ra = std::abs(a.variance / 5.0 - a.limit);
  const double rb = std::abs(b.variance / 50.0 - b.limit);
  EXPECT_LT(rb, ra);
}

TEST(KernelNorm, PointMassKernelMatchesCovarianceRoute) {
  const auto model = CovarianceModel::exponential(1, 0.5);
  const auto k = DiscreteKernel::tensor_power(Axis::point(0.0), {1.0}, 2);
  // ||delta^{x2}||_kappa^2 = int gamma^2 = scale.
  EXPECT_NEAR(kappa_norm_sq(k, model), 0.5, 1e-8);
}

TEST(Maruyama, PositiveForIndicatorKernel) {
  const auto mu = SpectralMeasure::from_model(CovarianceModel::gaussian(1));
  const auto r = maruyama_ratio(SpectralKernel::indicator_power(2, 0.0, 1.0), mu, 0.25);
  EXPECT_TRUE(r.positive);
  EXPECT_GT(r.ratio, 0.0);
}

TEST(Contraction, DecreasingInR) {
  const double radii[] = {5.0, 10.0, 20.0};
  const auto out = contraction_decay(CovarianceModel::gaussian(1), 2, radii, 0.25);
  ASSERT_EQ(out.size(), 3u);
  EXPECT_GT(out[0].normalized, out[1].normalized);
  EXPECT_GT(out[1].normalized, out[2].normalized);
}

TEST(WindowKernel, OrderOneIsIntervalOverlap) {
  // g_1(y) = |[y - 1, y] intersected with [-R, R]|.
  const auto g = window_kernel(1, 2.0, 0.5);
  const auto& nodes = g.axis().nodes;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    const double y = nodes[i];
    const double len = std::max(0.0, std::min(y, 2.0) - std::max(y - 1.0, -2.0));
    EXPECT_NEAR(g.values()[i], len, 1e-12) << "y = " << y;
  }
}

TEST(RunBM, DeterministicAcrossThreadCounts) {
  BMExperiment exp;
  exp.series = HermiteSeries({{2, 1.0}});
  exp.radii = {5.0, 10.0};
  exp.grid = grid1(12.0, 0.25);
  exp.n_reps = 40;
  exp.master_seed = 77;
  set_thread_count(1);
  const auto a = run_bm(exp);
  set_thread_count(3);
  const auto b = run_bm(exp);
  set_thread_count(0);
  EXPECT_EQ(a.to_csv(), b.to_csv());
  EXPECT_EQ(a.rows().size(), 80u);
  a.check_unique_seeds();
}

TEST(RunBM, ReplicationReplaysFromItsSeed) {
  BMExperiment exp;
  exp.radii = {8.0};
  exp.grid = grid1(10.0, 0.25);
  exp.n_reps = 5;
  exp.master_seed = 3;
  const auto ens = run_bm(exp);
  const auto& row = ens.rows()[3];
  CirculantSampler sampler(exp.model, exp.grid);
  const auto s = sampler.sample(row.seed);
  const double a = spatial_average(apply_series(exp.series, s), exp.grid, 8.0) / std::sqrt(8.0);
  EXPECT_DOUBLE_EQ(a, row.value);
}

TEST(RunBM, EmptyEnsemble) {
  BMExperiment exp;
  exp.radii = {1.0};
  exp.grid = grid1(2.0, 0.5);
  exp.n_reps = 0;
  try {
    run_bm(exp);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::empty_ensemble);
  }
}

TEST(CLT, DiagnosticsOnNormalData) {
  RandomStream rs(9, StreamTag::test, 0);
  std::vector<double> v(3000);
  for (auto& x : v) x = 2.0 * rs.normal();
  const auto r = clt_diagnostics(v, 4.0);
  EXPECT_EQ(r.sigma_source, "theory");
  EXPECT_GT(r.ks_p_value, 0.01);
  EXPECT_NEAR(r.fourth_moment_ratio, 3.0, 0.3);
  EXPECT_EQ(clt_diagnostics(v).sigma_source, "ensemble");
  EXPECT_THROW(clt_diagnostics(std::vector<double>(10, 1.0)), Error);
}
