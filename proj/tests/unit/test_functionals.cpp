#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "chaosavg/error.hpp"
#include "chaosavg/field.hpp"
#include "chaosavg/functionals.hpp"
#include "chaosavg/quadrature.hpp"
#include "chaosavg/rng.hpp"
#include "chaosavg/stats.hpp"

using namespace chaosavg;

namespace {

DiscreteKernel random_symmetric(const Axis& axis, int order, RandomStream& rs) {
  const std::size_t n = axis.size();
  std::vector<double> v(order == 1 ? n : n * n);
  if (order == 1) {
    for (auto& x : v) x = rs.normal();
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) v[i * n + j] = v[j * n + i] = rs.normal();
    }
  }
  return DiscreteKernel(order, axis, v, true);
}

}  // namespace

TEST(Hermite, LowOrders) {
  for (double x : {-1.3, 0.0, 0.4, 2.2}) {
    EXPECT_DOUBLE_EQ(hermite_eval(0, x), 1.0);
    EXPECT_DOUBLE_EQ(hermite_eval(1, x), x);
    EXPECT_NEAR(hermite_eval(2, x), x * x - 1.0, 1e-14);
    EXPECT_NEAR(hermite_eval(3, x), x * x * x - 3.0 * x, 1e-13);
    EXPECT_NEAR(hermite_eval(4, x), x * x * x * x - 6.0 * x * x + 3.0, 1e-12);
  }
}

TEST(Hermite, OrthogonalUnderGaussianWeight) {
  const double inf = std::numeric_limits<double>::infinity();
  quad::Options o;
  o.rel_tol = 1e-12;
  for (int p = 0; p <= 4; ++p) {
    for (int q = 0; q <= 4; ++q) {
      const double v = quad::gauss_kronrod(
                           [&](double x) {
                             return hermite_eval(p, x) * hermite_eval(q, x) * std::exp(-0.5 * x * x) /
                                    std::sqrt(2.0 * M_PI);
                           },
                           -inf, inf, o)
                           .value;
      EXPECT_NEAR(v, p == q ? std::tgamma(p + 1.0) : 0.0, 1e-9) << p << " " << q;
    }
  }
}

TEST(Hermite, SeriesBasics) {
  HermiteSeries g({{3, 0.5}, {1, 0.0}, {2, 2.0}});
  EXPECT_EQ(g.rank(), 2);
  EXPECT_EQ(g.max_order(), 3);
  EXPECT_NEAR(g.second_moment(), 4.0 * 2.0 + 0.25 * 6.0, 1e-14);
  EXPECT_NEAR(g(1.5), 2.0 * (1.5 * 1.5 - 1.0) + 0.5 * (1.5 * 1.5 * 1.5 - 4.5), 1e-14);
  EXPECT_THROW(HermiteSeries({{1, 0.0}}), Error);
  EXPECT_THROW(HermiteSeries({{0, 1.0}}), Error);
}

TEST(Hermite, CrossMomentsOfStationaryField) {
  // E[H_p(Y_a) H_q(Y_b)] = delta_pq p! rho(a - b)^p for p, q <= 3, within 4 SE.
  GridSpec g;
  g.half_extent = 2.0;
  g.spacing = 0.5;
  const auto model = CovarianceModel::gaussian(1);
  CirculantSampler sampler(model, g);
  const int n = 20000;
  const int lag = 1;
  const double rho = model.gamma_radial(lag * g.spacing);
  std::vector<std::vector<double>> stat(16);
  for (int r = 0; r < n; ++r) {
    const auto s = sampler.sample(derive_seed(21, r));
    for (int p = 0; p < 4; ++p) {
      for (int q = 0; q < 4; ++q) {
        double acc = 0.0;
        int cnt = 0;
        for (std::size_t i = 0; i + lag < s.values.size(); ++i, ++cnt) {
          acc += hermite_eval(p, s.values[i]) * hermite_eval(q, s.values[i + lag]);
        }
        stat[p * 4 + q].push_back(acc / cnt);
      }
    }
  }
  for (int p = 1; p < 4; ++p) {
    for (int q = 1; q < 4; ++q) {
      const auto m = moments(stat[p * 4 + q]);
      const double target = p == q ? std::tgamma(p + 1.0) * std::pow(rho, p) : 0.0;
      EXPECT_LT(std::abs(m.mean - target), 4.0 * m.mean_se) << p << " " << q;
    }
  }
}

TEST(Axis, Rules) {
  const auto t = Axis::trapezoid(0.0, 1.0, 5);
  double s = 0.0;
  for (double w : t.weights) s += w;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_NEAR(t.uniform_spacing(), 0.25, 1e-15);
  const auto gl = Axis::gauss_legendre(-1.0, 2.0, 6);
  double m3 = 0.0;
  for (std::size_t i = 0; i < gl.size(); ++i) m3 += gl.weights[i] * std::pow(gl.nodes[i], 3);
  EXPECT_NEAR(m3, (16.0 - 1.0) / 4.0, 1e-12);
  EXPECT_EQ(Axis::gauss_legendre(0.0, 1.0, 4).uniform_spacing(), 0.0);
}

TEST(Gram, MatchesDirectFormula) {
  const auto axis = Axis::gauss_legendre(-1.0, 1.5, 7);
  const auto model = CovarianceModel::exponential(1, 0.7);
  const auto m = weighted_gram(axis, model, 0.3);
  for (std::size_t i = 0; i < axis.size(); ++i) {
    for (std::size_t j = 0; j < axis.size(); ++j) {
      const double direct = axis.weights[i] * model.gamma_radial(axis.nodes[i] - axis.nodes[j] + 0.3) * axis.weights[j];
      EXPECT_NEAR(m[i * axis.size() + j], direct, 1e-15);
    }
  }
}

TEST(Gram, RieszDiagonalIsCellAverage) {
  const auto axis = Axis::midpoint(0.0, 1.0, 10);
  const double beta = 0.5, h = 0.1;
  const auto m = weighted_gram(axis, CovarianceModel::riesz(1, beta), 0.0);
  const double avg = std::pow(h / 2.0, -beta) / (1.0 - beta);
  EXPECT_NEAR(m[0], h * h * avg, 1e-12);
  EXPECT_NEAR(m[1], h * h * std::pow(h, -beta), 1e-12);
}

TEST(Kernel, PointMassNorm) {
  const auto k = DiscreteKernel::from_function(Axis::point(0.0), {1.0});
  EXPECT_NEAR(h_norm(k, CovarianceModel::gaussian(1)), 1.0, 1e-15);
  const auto k2 = DiscreteKernel::tensor_power(Axis::point(0.0), {1.0}, 2);
  EXPECT_NEAR(h_norm(k2, CovarianceModel::exponential(1)), 1.0, 1e-15);
}

TEST(Kernel, TensorPowerEntries) {
  const auto axis = Axis::trapezoid(0.0, 1.0, 3);
  const auto k = DiscreteKernel::tensor_power(axis, {1.0, 2.0, 3.0}, 3);
  EXPECT_DOUBLE_EQ(k.at({0, 1, 2}), 6.0);
  EXPECT_DOUBLE_EQ(k.at({2, 2, 1}), 18.0);
  EXPECT_EQ(k.symmetry_defect(0, 2), 0.0);
  EXPECT_FALSE(k.rank_one_factor().empty());
}

TEST(Kernel, FullContractionIsInnerProduct) {
  RandomStream rs(4, StreamTag::test, 0);
  const auto axis = Axis::trapezoid(-1.0, 1.0, 6);
  const auto model = CovarianceModel::gaussian(1);
  const auto f = random_symmetric(axis, 1, rs);
  const auto g = random_symmetric(axis, 1, rs);
  double direct = 0.0;
  for (std::size_t i = 0; i < axis.size(); ++i) {
    for (std::size_t j = 0; j < axis.size(); ++j) {
      direct += f.values()[i] * g.values()[j] * axis.weights[i] * axis.weights[j] *
                model.gamma_radial(axis.nodes[i] - axis.nodes[j]);
    }
  }
  const auto c = contract(f, g, 1, model);
  EXPECT_EQ(c.order(), 0);
  EXPECT_NEAR(c.values()[0], direct, 1e-12);
  EXPECT_NEAR(inner_product(f, g, model), direct, 1e-12);
}

TEST(Kernel, ContractionSymmetry) {
  RandomStream rs(5, StreamTag::test, 0);
  const auto axis = Axis::trapezoid(0.0, 2.0, 7);
  const auto model = CovarianceModel::exponential(1);
  const auto f = random_symmetric(axis, 2, rs);
  const auto g = random_symmetric(axis, 2, rs);
  const auto fg = contract(f, g, 1, model);
  const auto gf = contract(g, f, 1, model);
  for (int a = 0; a < 7; ++a) {
    for (int b = 0; b < 7; ++b) EXPECT_NEAR(fg.at({a, b}), gf.at({b, a}), 1e-12);
  }
}

TEST(Kernel, CauchySchwarz) {
  RandomStream rs(6, StreamTag::test, 0);
  const auto axis = Axis::trapezoid(-1.0, 1.0, 6);
  const auto model = CovarianceModel::gaussian(1, 0.8);
  for (int trial = 0; trial < 100; ++trial) {
    const int p = 1 + trial % 2;
    const auto f = random_symmetric(axis, p, rs);
    const auto g = random_symmetric(axis, p, rs);
    const double ip = inner_product(f, g, model);
    const double nf = h_norm(f, model), ng = h_norm(g, model);
    EXPECT_LE(ip * ip, nf * nf * ng * ng * (1.0 + 1e-12));
    if (p == 2) EXPECT_LE(h_norm(contract(f, g, 1, model), model), nf * ng * (1.0 + 1e-12));
  }
}

TEST(Kernel, ShiftedContractionOfPointMasses) {
  const auto f = DiscreteKernel::tensor_power(Axis::point(0.0), {1.0}, 2);
  const auto model = CovarianceModel::gaussian(1);
  const double z = 0.7;
  EXPECT_NEAR(contract_shifted(f, f, 2, model, z).values()[0], std::pow(model.gamma_radial(z), 2), 1e-15);
}

TEST(Kernel, RejectsBadContraction) {
  const auto a = DiscreteKernel::tensor_power(Axis::trapezoid(0.0, 1.0, 3), {1.0, 1.0, 1.0}, 2);
  const auto b = DiscreteKernel::tensor_power(Axis::trapezoid(0.0, 2.0, 3), {1.0, 1.0, 1.0}, 2);
  const auto model = CovarianceModel::gaussian(1);
  EXPECT_THROW(contract(a, a, 3, model), Error);
  EXPECT_THROW(contract(a, b, 1, model), Error);
}

TEST(Kernel, ApplySeriesPointwise) {
  GridSpec g;
  g.half_extent = 1.0;
  g.spacing = 0.5;
  const auto s = sample_circulant(CovarianceModel::gaussian(1), g, 3);
  HermiteSeries h({{2, 1.0}});
  const auto out = apply_series(h, s);
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_NEAR(out[i], s.values[i] * s.values[i] - 1.0, 1e-14);
}
