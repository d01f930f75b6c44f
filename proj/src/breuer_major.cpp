#include "chaosavg/breuer_major.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "chaosavg/error.hpp"
#include "chaosavg/parallel.hpp"
#include "chaosavg/quadrature.hpp"

namespace chaosavg {

double spatial_average(std::span<const double> values, const GridSpec& grid, double R) {
  grid.validate();
  require(values.size() == grid.sites(), ErrorCode::invalid_argument, "spatial_average: value count differs from grid");
  require(R >= 0.0 && R <= grid.half_extent * (1.0 + 1e-12), ErrorCode::invalid_argument,
          "spatial_average: R exceeds the grid half-extent");
  const int n = grid.points_per_axis();
  const double r2 = R * R * (1.0 + 1e-12);
  double s = 0.0;
  if (grid.d == 1) {
    for (int i = 0; i < n; ++i) {
      const double x = grid.coord(i);
      if (x * x <= r2) s += values[i];
    }
    return s * grid.spacing;
  }
  for (int i = 0; i < n; ++i) {
    const double x = grid.coord(i);
    for (int j = 0; j < n; ++j) {
      const double y = grid.coord(j);
      if (x * x + y * y <= r2) s += values[static_cast<std::size_t>(i) * n + j];
    }
  }
  return s * grid.spacing * grid.spacing;
}

MCEnsemble run_bm(const BMExperiment& exp) {
  require(exp.n_reps > 0, ErrorCode::empty_ensemble, "run_bm: n_reps = 0 gives an empty ensemble");
  require(!exp.radii.empty(), ErrorCode::invalid_argument, "run_bm: no radii given");
  exp.grid.validate();
  require(exp.model.dim() == exp.grid.d, ErrorCode::invalid_argument, "run_bm: model and grid dimensions differ");
  for (double R : exp.radii) {
    require(R > 0.0 && R <= exp.grid.half_extent, ErrorCode::invalid_argument,
            "run_bm: radius " + std::to_string(R) + " is not inside (0, L]");
  }
  require(exp.model.finite_at_zero(), ErrorCode::invalid_argument,
          "run_bm: Hermite functionals need a field with finite variance");

  std::unique_ptr<CirculantSampler> circ;
  std::unique_ptr<SpectralSampler> spec;
  double variance = exp.model.gamma_zero();
  if (exp.sampler.method == SamplerMethod::circulant) {
    circ = std::make_unique<CirculantSampler>(exp.model, exp.grid, exp.sampler.circulant);
  } else {
    spec = std::make_unique<SpectralSampler>(exp.model, exp.grid, exp.sampler.cutoff, exp.sampler.modes_per_axis);
    variance -= spec->truncation_bias();
  }
  const double inv_sd = 1.0 / std::sqrt(variance);
  const std::size_t nr = exp.radii.size();
  std::vector<double> out(exp.n_reps * nr);
  std::vector<std::uint64_t> seeds(exp.n_reps);
  parallel_for(exp.n_reps, [&](std::size_t rep) {
    const std::uint64_t seed = derive_seed(exp.master_seed, rep);
    seeds[rep] = seed;
    FieldSample s = circ ? circ->sample(seed) : spec->sample(seed);
    for (double& v : s.values) v *= inv_sd;
    const auto g = apply_series(exp.series, s);
    for (std::size_t k = 0; k < nr; ++k) {
      const double R = exp.radii[k];
      out[rep * nr + k] = spatial_average(g, exp.grid, R) / std::pow(R, 0.5 * exp.grid.d);
    }
  });
  MCEnsemble ens("bm");
  for (std::size_t k = 0; k < nr; ++k) {
    for (std::size_t rep = 0; rep < exp.n_reps; ++rep) ens.add(exp.radii[k], rep, out[rep * nr + k], seeds[rep]);
  }
  return ens;
}

// ---------------------------------------------------------------------------

double rho_power_integral(const CovarianceModel& model, int q) {
  require(q >= 1, ErrorCode::invalid_argument, "rho_power_integral: q must be >= 1");
  const int d = model.dim();
  if (!model.finite_at_zero()) {
    // rho = |x|^{-beta} up to normalization: the power q beta must exceed d at
    // infinity and stay below d at the origin, which never both hold.
    fail(ErrorCode::invalid_argument,
         "int rho^q diverges for q = " + std::to_string(q) + ": " + model.id() +
             " has infinite variance, so rho = gamma / gamma(0) is not defined and |x|^{-q beta} is not integrable");
  }
  const double g0 = model.gamma_zero();
  auto f = [&](double r) {
    const double rho = model.gamma_radial(r) / g0;
    return std::pow(r, d - 1) * std::pow(rho, q);
  };
  const double c = model.correlation_length();
  const double brk[] = {c, 2.0 * c};
  const double head = quad::piecewise(f, 0.0, 2.0 * c, brk, false).value;
  const double tail = quad::exp_sinh(f, 2.0 * c).value;
  const double total = sphere_area(d) * (head + tail);
  require(std::isfinite(total), ErrorCode::invalid_argument,
          "int rho^q diverges for q = " + std::to_string(q));
  return total;
}

double limit_variance_bm(const CovarianceModel& model, const HermiteSeries& series) {
  double s = 0.0;
  for (const auto& [q, c] : series.coeffs()) s += c * c * std::tgamma(q + 1.0) * rho_power_integral(model, q);
  return ball_volume(model.dim()) * s;
}

// ---------------------------------------------------------------------------

double kappa_norm_sq(const DiscreteKernel& f, const CovarianceModel& gamma) {
  const int p = f.order();
  require(p >= 1, ErrorCode::invalid_argument, "kappa_norm_sq: order must be >= 1");
  const int d = gamma.dim();
  if (!gamma.finite_at_zero()) {
    const double ratio = d / gamma.beta();
    require(p > ratio, ErrorCode::invalid_argument,
            "kappa_p diverges for the riesz kernel unless p > d/beta (p = " + std::to_string(p) +
                ", d/beta = " + std::to_string(ratio) + ")");
  }
  const auto& nodes = f.axis().nodes;
  const double width = nodes.back() - nodes.front();
  // S(z) = S(-z), so integrate over [0, inf) and double.
  auto s = [&](double z) { return contract_shifted(f, f, p, gamma, z).values()[0]; };
  quad::Options opt;
  opt.rel_tol = 1e-9;
  double head = 0.0;
  if (width > 0.0) head = quad::gauss_kronrod(s, 0.0, width, opt).value;
  const double tail = quad::exp_sinh(s, width, opt).value;
  return 2.0 * (head + tail);
}

KernelVariance limit_variance_kernel(const std::vector<DiscreteKernel>& kernels, const CovarianceModel& gamma) {
  require(!kernels.empty(), ErrorCode::invalid_argument, "limit_variance_kernel: no kernels given");
  require(gamma.dim() == 1, ErrorCode::invalid_argument, "limit_variance_kernel: discrete kernels are one-dimensional");
  KernelVariance out;
  const double omega = ball_volume(gamma.dim());
  for (const auto& f : kernels) {
    const double pf = std::tgamma(f.order() + 1.0);
    const double term = omega * pf * kappa_norm_sq(f, gamma);
    out.terms.push_back(term);
    out.sigma2 += term;
    out.sigma2_abs += omega * pf * kappa_norm_sq(f.absolute(), gamma);
  }
  require(std::isfinite(out.sigma2_abs), ErrorCode::numerical_failure,
          "limit_variance_kernel: the absolute-value integral is not finite");
  return out;
}

// ---------------------------------------------------------------------------

SpectralMeasure SpectralMeasure::from_model(const CovarianceModel& model) {
  require(model.dim() == 1, ErrorCode::invalid_argument, "spectral route supports d = 1");
  SpectralMeasure mu;
  mu.phi = [model](double k) { return model.phi_radial(std::abs(k)); };
  mu.total_mass = model.gamma_zero();
  const double l = model.scale();
  switch (model.kind()) {
    case ModelKind::gaussian:
      mu.draw = [l](RandomStream& rs) { return rs.normal() * std::sqrt(2.0) / l; };
      break;
    case ModelKind::exponential:
      mu.draw = [l](RandomStream& rs) { return std::tan(M_PI * (rs.uniform() - 0.5)) / l; };
      break;
    case ModelKind::bump:
      // sin^2(a xi) / (pi a xi^2) under a Cauchy(1/a) envelope with bound 2.
      mu.draw = [l](RandomStream& rs) {
        for (;;) {
          const double u = std::tan(M_PI * (rs.uniform() - 0.5));
          const double s = std::sin(u);
          const double accept = u == 0.0 ? 0.5 : s * s * (1.0 + u * u) / (2.0 * u * u);
          if (rs.uniform() < accept) return u / l;
        }
      };
      break;
    case ModelKind::riesz:
      mu.singular_points = {0.0};
      break;
  }
  return mu;
}

SpectralKernel SpectralKernel::indicator_power(int p, double a, double b) {
  require(p >= 1 && b > a, ErrorCode::invalid_argument, "indicator_power: need p >= 1 and b > a");
  const double w = b - a;
  SpectralKernel k;
  k.p = p;
  k.factor = [w](double xi) {
    const double u = 0.5 * w * xi;
    if (std::abs(u) < 1e-8) return w * w;
    const double s = std::sin(u) / u;
    return w * w * s * s;
  };
  return k;
}

namespace {

double psi2(const SpectralKernel& k, const SpectralMeasure& mu, double x) {
  auto f = [&](double xi) { return k.factor(xi) * k.factor(x - xi) * mu.phi(xi) * mu.phi(x - xi); };
  const bool singular = !mu.singular_points.empty();
  std::vector<double> brk{0.0, x, 0.5 * x};
  if (x == 0.0) brk = {0.0};
  const double inf = std::numeric_limits<double>::infinity();
  quad::Options opt;
  opt.rel_tol = 1e-10;
  return quad::piecewise(f, -inf, inf, brk, singular, opt).value;
}

struct McResult {
  double mean = 0.0;
  double se = 0.0;
};

// Mean of h over n draws, reduced in index order over fixed-size blocks.
McResult mc_mean(std::size_t n, std::uint64_t seed, const std::function<double(RandomStream&)>& h) {
  constexpr std::size_t block = 4096;
  const std::size_t nb = (n + block - 1) / block;
  std::vector<double> s1(nb), s2(nb);
  parallel_for(nb, [&](std::size_t b) {
    RandomStream rs(seed, StreamTag::spectral_mc, b);
    const std::size_t lo = b * block;
    const std::size_t hi = std::min(n, lo + block);
    double a = 0.0, q = 0.0;
    for (std::size_t i = lo; i < hi; ++i) {
      const double v = h(rs);
      a += v;
      q += v * v;
    }
    s1[b] = a;
    s2[b] = q;
  });
  double a = 0.0, q = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    a += s1[b];
    q += s2[b];
  }
  const double m = a / n;
  const double var = std::max(0.0, (q / n - m * m) * n / (n - 1.0));
  return {m, std::sqrt(var / n)};
}

void require_sampler(const SpectralMeasure& mu, int p) {
  require(static_cast<bool>(mu.draw) && std::isfinite(mu.total_mass), ErrorCode::invalid_argument,
          "spectral route for p = " + std::to_string(p) +
              " uses Monte Carlo over the spectral measure, which needs a finite measure with a sampler");
}

}  // namespace

double psi(const SpectralKernel& k, const SpectralMeasure& mu, double x) {
  if (k.p == 1) return k.factor(x) * mu.phi(x);
  require(k.p == 2, ErrorCode::invalid_argument, "psi: quadrature route covers p <= 2");
  return psi2(k, mu, x);
}

SpectralVariance var_spectral(const SpectralKernel& k, const SpectralMeasure& mu, double R,
                              const SpectralRouteOptions& opt) {
  require(k.p >= 1, ErrorCode::invalid_argument, "var_spectral: p must be >= 1");
  require(R > 0.0, ErrorCode::invalid_argument, "var_spectral: R must be positive");
  const double pf = std::tgamma(k.p + 1.0);
  const double omega = ball_volume(1);
  const double pref = pf * 2.0 * M_PI * omega;
  SpectralVariance out;
  if (k.p <= 2) {
    out.psi0 = psi(k, mu, 0.0);
    require(std::isfinite(out.psi0), ErrorCode::numerical_failure, "var_spectral: Psi_p(0) is not finite");
    const double ell = integrate_against_ell(1, R, [&](double x) { return psi(k, mu, x); }, opt.ell);
    out.variance = pref * R * ell;
  } else {
    require_sampler(mu, k.p);
    const double m = mu.total_mass;
    const int p = k.p;
    const auto v = mc_mean(opt.mc_samples, opt.seed, [&](RandomStream& rs) {
      double tau = 0.0, w = 1.0;
      for (int j = 0; j < p; ++j) {
        const double xi = mu.draw(rs);
        tau += xi;
        w *= k.factor(xi);
      }
      return w * ell_R_radial(1, R, std::abs(tau));
    });
    out.variance = pref * R * std::pow(m, p) * v.mean;
    out.variance_se = pref * R * std::pow(m, p) * v.se;
    const auto z = mc_mean(opt.mc_samples, opt.seed ^ 0x5bd1e995ULL, [&](RandomStream& rs) {
      double tau = 0.0, w = 1.0;
      for (int j = 0; j + 1 < p; ++j) {
        const double xi = mu.draw(rs);
        tau += xi;
        w *= k.factor(xi);
      }
      return w * k.factor(-tau) * mu.phi(-tau);
    });
    out.psi0 = std::pow(m, p - 1) * z.mean;
    out.psi0_se = std::pow(m, p - 1) * z.se;
  }
  out.limit = pref * out.psi0;
  out.limit_se = pref * out.psi0_se;
  return out;
}

MaruyamaResult maruyama_ratio(const SpectralKernel& k, const SpectralMeasure& mu, double h,
                              const SpectralRouteOptions& opt) {
  require(h > 0.0, ErrorCode::invalid_argument, "maruyama_ratio: h must be positive");
  MaruyamaResult out;
  if (k.p <= 2) {
    auto f = [&](double x) { return psi(k, mu, x); };
    const double brk[] = {0.0};
    const bool singular = !mu.singular_points.empty() && k.p == 1;
    out.ratio = 2.0 * quad::piecewise(f, 0.0, h, brk, singular).value / h;
  } else {
    require_sampler(mu, k.p);
    const int p = k.p;
    const auto v = mc_mean(opt.mc_samples, opt.seed, [&](RandomStream& rs) {
      double tau = 0.0, w = 1.0;
      for (int j = 0; j < p; ++j) {
        const double xi = mu.draw(rs);
        tau += xi;
        w *= k.factor(xi);
      }
      return std::abs(tau) <= h ? w : 0.0;
    });
    const double m = std::pow(mu.total_mass, p);
    out.ratio = m * v.mean / h;
    out.std_error = m * v.se / h;
  }
  out.positive = out.ratio > std::max(1e-14, 2.0 * out.std_error);
  return out;
}

// ---------------------------------------------------------------------------

CLTReport clt_diagnostics(std::span<const double> values, std::optional<double> sigma2) {
  require(values.size() >= 30, ErrorCode::insufficient_data,
          "clt_diagnostics: need at least 30 replications, got " + std::to_string(values.size()));
  const MomentSummary m = moments(values);
  CLTReport r;
  r.n = m.n;
  r.mean = m.mean;
  r.variance = m.variance;
  r.fourth_moment_ratio = 3.0 + m.excess_kurtosis;
  r.fourth_moment_ratio_se = m.excess_kurtosis_se;
  double sd;
  if (sigma2 && *sigma2 > 0.0) {
    sd = std::sqrt(*sigma2);
    r.sigma_source = "theory";
  } else {
    sd = std::sqrt(m.variance);
    r.sigma_source = "ensemble";
  }
  require(sd > 0.0, ErrorCode::numerical_failure, "clt_diagnostics: ensemble has zero variance");
  const auto ks = ks_normal(values, sigma2 ? 0.0 : m.mean, sd);
  r.ks_statistic = ks.statistic;
  r.ks_p_value = ks.p_value;
  return r;
}

// ---------------------------------------------------------------------------

DiscreteKernel window_kernel(int p, double R, double h) {
  require(R > 0.0 && h > 0.0, ErrorCode::invalid_argument, "window_kernel: R and h must be positive");
  const double span = 2.0 * R + 1.0;
  const int n = static_cast<int>(std::lround(span / h)) + 1;
  require(std::abs((n - 1) * h - span) < 1e-9 * span, ErrorCode::invalid_argument,
          "window_kernel: (2R + 1) / h must be an integer");
  const Axis axis = Axis::trapezoid(-R, R + 1.0, n);
  std::size_t total = 1;
  for (int k = 0; k < p; ++k) total *= n;
  std::vector<double> v(total);
  std::vector<int> idx(p);
  for (std::size_t f = 0; f < total; ++f) {
    std::size_t rest = f;
    double lo = -R, hi = R;
    for (int k = p - 1; k >= 0; --k) {
      const double y = axis.nodes[rest % n];
      rest /= n;
      lo = std::max(lo, y - 1.0);
      hi = std::min(hi, y);
    }
    v[f] = std::max(0.0, hi - lo);
  }
  return DiscreteKernel(p, axis, std::move(v), true);
}

std::vector<ContractionNorm> contraction_decay(const CovarianceModel& gamma, int p, std::span<const double> radii,
                                               double h) {
  require(p >= 2, ErrorCode::invalid_argument, "contraction_decay: p must be >= 2");
  std::vector<ContractionNorm> out;
  for (double R : radii) {
    const DiscreteKernel g = window_kernel(p, R, h);
    const double sigma2 = std::tgamma(p + 1.0) * inner_product(g, g, gamma);
    for (int r = 1; r < p; ++r) {
      const DiscreteKernel c = contract(g, g, r, gamma);
      ContractionNorm cn;
      cn.R = R;
      cn.r = r;
      cn.norm = h_norm(c, gamma);
      cn.sigma2 = sigma2;
      cn.normalized = cn.norm / sigma2;
      out.push_back(cn);
    }
  }
  return out;
}

}  // namespace chaosavg
