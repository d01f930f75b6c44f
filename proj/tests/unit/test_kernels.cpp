#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "chaosavg/error.hpp"
#include "chaosavg/kernels.hpp"
#include "chaosavg/quadrature.hpp"
#include "chaosavg/rng.hpp"
#include "chaosavg/special.hpp"

using namespace chaosavg;

namespace {
const double kInf = std::numeric_limits<double>::infinity();

double line_integral(const std::function<double(double)>& f) {
  quad::Options o;
  o.rel_tol = 1e-12;
  return quad::gauss_kronrod(f, -kInf, kInf, o).value;
}
}  // namespace

TEST(Catalog, ParsesIds) {
  EXPECT_EQ(CovarianceModel::parse("gaussian:scale=2", 1).kind(), ModelKind::gaussian);
  EXPECT_DOUBLE_EQ(CovarianceModel::parse("gaussian:scale=2", 1).scale(), 2.0);
  EXPECT_EQ(CovarianceModel::parse("riesz:beta=0.5", 1).kind(), ModelKind::riesz);
  EXPECT_EQ(CovarianceModel::parse("exponential:scale=1", 2).dim(), 2);
  EXPECT_EQ(CovarianceModel::parse("bump:radius=1", 1).kind(), ModelKind::bump);
}

TEST(Catalog, RejectsBadIds) {
  auto code_of = [](const std::string& id, int d) {
    try {
      CovarianceModel::parse(id, d);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::io_error;
  };
  EXPECT_EQ(code_of("cauchy:scale=1", 1), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("riesz:beta=1.5", 1), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("riesz", 1), ErrorCode::invalid_config);
  EXPECT_EQ(code_of("gaussian:scale=-1", 1), ErrorCode::invalid_config);
}

TEST(Catalog, SymmetricAndNonnegativeSpectrum) {
  RandomStream rs(7, StreamTag::test, 0);
  for (int d = 1; d <= 2; ++d) {
    for (const auto& m : {CovarianceModel::gaussian(d), CovarianceModel::exponential(d), CovarianceModel::bump(d),
                          CovarianceModel::riesz(d, 0.5)}) {
      std::vector<double> x(d), mx(d);
      for (int i = 0; i < 10000; ++i) {
        for (int k = 0; k < d; ++k) {
          x[k] = 8.0 * (2.0 * rs.uniform() - 1.0);
          mx[k] = -x[k];
        }
        ASSERT_EQ(m.gamma_at(x), m.gamma_at(mx)) << m.id();
        ASSERT_GE(m.phi_at(x), 0.0) << m.id();
      }
    }
  }
}

TEST(Catalog, GaussianSpectralMassIsVariance) {
  const auto g = CovarianceModel::gaussian(1, 1.3);
  EXPECT_NEAR(line_integral([&](double k) { return g.phi_radial(k); }), g.gamma_zero(), 1e-8);
}

TEST(Catalog, FourierPairsInOneDimension) {
  // phi(xi) = (2 pi)^{-1} int cos(x xi) gamma(x) dx for the integrable models.
  for (const auto& m : {CovarianceModel::gaussian(1, 0.8), CovarianceModel::exponential(1, 1.5),
                        CovarianceModel::bump(1, 1.0)}) {
    for (double xi : {0.0, 0.4, 1.1, 3.0}) {
      const double breaks[] = {-2.0, -1.0, 0.0, 1.0, 2.0};
      quad::Options o;
      o.rel_tol = 1e-12;
      const double ft =
          quad::piecewise([&](double x) { return std::cos(x * xi) * m.gamma_radial(x); }, -40.0, 40.0, breaks, false, o)
              .value /
          (2.0 * M_PI);
      EXPECT_NEAR(ft, m.phi_radial(xi), 1e-8) << m.id() << " xi = " << xi;
    }
  }
}

TEST(Catalog, IntegralMatchesSpectralValueAtZero) {
  const auto e = CovarianceModel::exponential(1, 2.0);
  EXPECT_NEAR(e.gamma_integral(), 4.0, 1e-12);  // int exp(-|x|/2) = 4
  const auto g = CovarianceModel::gaussian(2, 1.0);
  EXPECT_NEAR(g.gamma_integral(), M_PI, 1e-12);
}

TEST(Catalog, RieszConstantMatchesClosedForm) {
  // int exp(-i x xi) |xi|^{beta-d} dxi = pi^{d/2} 2^beta Gamma(beta/2) / Gamma((d-beta)/2) |x|^{-beta}.
  for (int d = 1; d <= 3; ++d) {
    for (double beta : {0.3, 0.5, 0.9}) {
      const double c = std::tgamma(0.5 * (d - beta)) / (std::pow(M_PI, 0.5 * d) * std::pow(2.0, beta) *
                                                        std::tgamma(0.5 * beta));
      EXPECT_NEAR(CovarianceModel::riesz(d, beta).riesz_constant(), c, 1e-6 * c) << d << " " << beta;
    }
  }
}

TEST(Catalog, ShellMassAddsUp) {
  const auto g = CovarianceModel::gaussian(2);
  const double a = g.phi_shell_mass(0.0, 1.0) + g.phi_shell_mass(1.0, 3.0) + g.phi_shell_mass(3.0, 40.0);
  EXPECT_NEAR(a, 1.0, 1e-10);
}

TEST(Temporal, GammaTValues) {
  EXPECT_DOUBLE_EQ(TemporalKernel::constant(1.0).Gamma_t(2.0), 4.0);
  EXPECT_DOUBLE_EQ(TemporalKernel::delta().Gamma_t(3.0), 1.0);
  EXPECT_NEAR(TemporalKernel::exponential(1.0).Gamma_t(1.0), 2.0 * (1.0 - std::exp(-1.0)), 1e-15);
}

TEST(Temporal, DoubleIntegralMatchesQuadrature) {
  const auto k = TemporalKernel::exponential(0.7);
  const double t = 1.2, s = 0.5;
  quad::Options o;
  o.rel_tol = 1e-11;
  const double ref = quad::gauss_kronrod(
                         [&](double u) {
                           const double kink[] = {u};
                           return quad::piecewise([&](double v) { return std::exp(-std::abs(u - v) / 0.7); }, 0.0, s,
                                                  kink, false, o)
                               .value;
                         },
                         0.0, t, o)
                         .value;
  EXPECT_NEAR(k.double_integral(t, s), ref, 1e-9);
}

TEST(Temporal, PowerKernelDoubleIntegral) {
  // int_0^1 int_0^1 |u - v|^{-a} = 2 / ((1 - a)(2 - a)).
  const double a = 0.4;
  EXPECT_NEAR(TemporalKernel::power(a).double_integral(1.0, 1.0), 2.0 / ((1.0 - a) * (2.0 - a)), 1e-12);
}

TEST(Temporal, DeltaCollapsesToOverlap) {
  EXPECT_DOUBLE_EQ(TemporalKernel::delta().double_integral(1.0, 0.4), 0.4);
}

TEST(Temporal, ParsesIds) {
  EXPECT_TRUE(TemporalKernel::parse("delta").is_delta());
  EXPECT_EQ(TemporalKernel::parse("power:alpha=0.5").kind(), TemporalKind::power);
  EXPECT_THROW(TemporalKernel::parse("power:alpha=1.5"), Error);
  EXPECT_THROW(TemporalKernel::parse("white"), Error);
}
