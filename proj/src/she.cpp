#include "chaosavg/she.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "chaosavg/error.hpp"
#include "chaosavg/parallel.hpp"
#include "chaosavg/quadrature.hpp"

namespace chaosavg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double sq_norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

// int_0^inf r^{a-1} / (1 + r^2) dr for 0 < a < 2.
double power_over_one_plus_sq(double a) { return 0.5 * M_PI / std::sin(0.5 * M_PI * a); }

}  // namespace

double heat_kernel_radial(int d, double t, double r) {
  require(t > 0.0, ErrorCode::invalid_argument, "heat_kernel: t must be positive");
  require(d >= 1, ErrorCode::invalid_argument, "heat_kernel: dimension must be >= 1");
  return std::pow(2.0 * M_PI * t, -0.5 * d) * std::exp(-r * r / (2.0 * t));
}

double heat_kernel(double t, std::span<const double> x) {
  return heat_kernel_radial(static_cast<int>(x.size()), t, std::sqrt(sq_norm(x)));
}

double chaos_kernel_f(double t, std::span<const double> x, std::span<const double> s, std::span<const double> y) {
  const std::size_t n = s.size();
  const std::size_t d = x.size();
  require(n >= 1 && d >= 1, ErrorCode::invalid_argument, "chaos_kernel_f: need n >= 1 and a point x");
  require(y.size() == n * d, ErrorCode::invalid_argument, "chaos_kernel_f: y must hold n points of dimension d");
  for (double sj : s) {
    if (!(sj > 0.0 && sj < t)) return 0.0;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s[a] > s[b]; });
  for (std::size_t i = 0; i + 1 < n; ++i) {
    require(s[order[i]] != s[order[i + 1]], ErrorCode::invalid_argument, "chaos_kernel_f: tied times");
  }
  std::vector<double> diff(d);
  auto gstep = [&](double dt, std::span<const double> a, std::span<const double> b) {
    for (std::size_t k = 0; k < d; ++k) diff[k] = a[k] - b[k];
    return heat_kernel(dt, diff);
  };
  double prod = gstep(t - s[order[0]], x, y.subspan(order[0] * d, d));
  for (std::size_t i = 0; i + 1 < n; ++i) {
    prod *= gstep(s[order[i]] - s[order[i + 1]], y.subspan(order[i] * d, d), y.subspan(order[i + 1] * d, d));
  }
  return prod / std::tgamma(n + 1.0);
}

// ---------------------------------------------------------------------------

DalangReport dalang_check(const CovarianceModel& gamma1) {
  const int d = gamma1.dim();
  const double area = sphere_area(d);
  DalangReport rep;
  if (gamma1.kind() == ModelKind::riesz) {
    const double c = gamma1.riesz_constant();
    const double beta = gamma1.beta();
    // phi = c r^{beta - d}: the radial integrand is c r^{beta - 1} / (1 + r^2).
    rep.integral = area * c * power_over_one_plus_sq(beta);
    rep.finite = std::isfinite(rep.integral);
    const double a = 2.0 * beta - d;
    if (a > 0.0 && a < 2.0) {
      rep.modified_integral = rep.integral + area * c * c * power_over_one_plus_sq(a);
      rep.modified_finite = true;
    } else {
      rep.modified_integral = kInf;
      rep.modified_finite = false;
    }
    return rep;
  }
  const double c = gamma1.correlation_length();
  auto radial = [&](double r, bool squared) {
    const double p = gamma1.phi_radial(r);
    return std::pow(r, d - 1) * (squared ? p + p * p : p) / (1.0 + r * r);
  };
  for (bool squared : {false, true}) {
    auto f = [&](double r) { return radial(r, squared); };
    const double v = area * (quad::gauss_kronrod(f, 0.0, 1.0 / c).value + quad::exp_sinh(f, 1.0 / c).value);
    if (squared) {
      rep.modified_integral = v;
      rep.modified_finite = std::isfinite(v);
    } else {
      rep.integral = v;
      rep.finite = std::isfinite(v);
    }
  }
  return rep;
}

void SHEConfig::validate() const {
  require(bm_steps >= 1, ErrorCode::invalid_config, "she config: bm_steps must be >= 1");
  require(n_z >= 1 && n_paths >= n_z, ErrorCode::invalid_config, "she config: need n_paths >= n_z >= 1");
  require(n_paths % n_z == 0, ErrorCode::invalid_config, "she config: n_paths must be a multiple of n_z");
  require(n_spectral >= 2, ErrorCode::invalid_config, "she config: n_spectral must be >= 2");
  require(z_proposal_scale >= 0.0 && std::isfinite(z_proposal_scale), ErrorCode::invalid_config,
          "she config: z_proposal_scale must be >= 0");
  const auto dal = dalang_check(gamma1);
  require(dal.finite, ErrorCode::numerical_failure,
          "Dalang's condition int phi / (1 + |xi|^2) < inf fails for " + gamma1.id());
}

// ---------------------------------------------------------------------------

double time_factor(const TemporalKernel& gamma0, double t, double s, double a) {
  require(t >= 0.0 && s >= 0.0 && a >= 0.0, ErrorCode::invalid_argument, "time_factor: need t, s, a >= 0");
  // (1 - e^{-a x}) / a, continuous at a = 0.
  auto ramp = [a](double x) { return a == 0.0 ? x : -std::expm1(-a * x) / a; };
  switch (gamma0.kind()) {
    case TemporalKind::constant: return gamma0.param() * ramp(t) * ramp(s);
    case TemporalKind::delta: {
      const double m = std::min(t, s);
      return 0.5 * std::exp(-a * (t + s - 2.0 * m)) * ramp(2.0 * m);
    }
    default: break;
  }
  // With w = u - v and sigma = u + v the sigma integral is explicit.
  auto k = [&](double w) {
    const double smax = std::min(2.0 * t - w, 2.0 * s + w);
    const double len = std::max(0.0, smax - std::abs(w));
    return gamma0.gamma0_at(w) * 0.5 * std::exp(-a * (t + s - smax)) * ramp(len);
  };
  quad::Options opt;
  opt.rel_tol = 1e-8;
  opt.abs_tol = 1e-11 * gamma0.double_integral(t, s);
  // Kinks at w = 0 and w = t - s; only the power kernel is singular (at 0).
  std::vector<double> pts{-s, 0.0, t - s, t};
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double lo = pts[i];
    const double hi = pts[i + 1];
    if (hi <= -s || lo >= t) continue;
    const bool touches_zero = lo == 0.0 || hi == 0.0;
    total += (gamma0.kind() == TemporalKind::power && touches_zero) ? quad::tanh_sinh(k, lo, hi, opt).value
                                                                     : quad::gauss_kronrod(k, lo, hi, opt).value;
  }
  return total;
}

double first_chaos_covariance(const CovarianceModel& gamma1, const TemporalKernel& gamma0, double R, double t,
                              double s, const EllIntegralOptions& opt) {
  require(R > 0.0, ErrorCode::invalid_argument, "first_chaos_covariance: R must be positive");
  require(t > 0.0 && s > 0.0, ErrorCode::invalid_argument, "first_chaos_covariance: times must be positive");
  const int d = gamma1.dim();
  require(dalang_check(gamma1).finite, ErrorCode::invalid_config, "first_chaos_covariance: Dalang's condition fails");
  auto f = [&](double r) { return gamma1.phi_radial(r) * time_factor(gamma0, t, s, 0.5 * r * r); };
  const double inner = integrate_against_ell(d, R, f, opt);
  return std::pow(R, d) * std::pow(2.0 * M_PI, d) * ball_volume(d) * inner;
}

double riesz_ball_integral(int d, double beta) {
  require(d >= 1 && beta > 0.0 && beta < std::min(2.0, static_cast<double>(d)), ErrorCode::invalid_argument,
          "riesz_ball_integral: need 0 < beta < min(2, d)");
  auto f = [d, beta](double r) { return std::pow(r, d - 1 - beta) * ball_overlap_volume(d, 1.0, r); };
  return sphere_area(d) * quad::tanh_sinh(f, 0.0, 2.0).value;
}

double kappa_beta(int d, double beta, double t, const TemporalKernel& gamma0) {
  require(t > 0.0, ErrorCode::invalid_argument, "kappa_beta: t must be positive");
  return gamma0.double_integral(t, t) * riesz_ball_integral(d, beta);
}

// ---------------------------------------------------------------------------

namespace {

std::size_t grid_steps(double T, int steps_per_unit) {
  const double x = T * steps_per_unit;
  const double n = std::round(x);
  require(n >= 1.0 && std::abs(x - n) < 1e-9 * std::max(1.0, x), ErrorCode::invalid_argument,
          "Brownian grid: t * bm_steps must be a positive integer");
  return static_cast<std::size_t>(n);
}

void fill_path(std::vector<double>& out, std::size_t n, int d, double dt, RandomStream& rs) {
  out.assign(n * d, 0.0);
  const double half = std::sqrt(0.5 * dt);
  for (int k = 0; k < d; ++k) {
    double pos = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      pos += half * rs.normal();
      out[i * d + k] = pos;
      pos += half * rs.normal();
    }
  }
}

}  // namespace

BMPathPair sample_path_pair(int d, double t, double s, int steps_per_unit, RandomStream& rs) {
  require(d >= 1 && steps_per_unit >= 1, ErrorCode::invalid_argument, "sample_path_pair: bad dimension or steps");
  BMPathPair p;
  p.d = d;
  p.dt = 1.0 / steps_per_unit;
  p.t = t;
  p.s = s;
  fill_path(p.x1, grid_steps(t, steps_per_unit), d, p.dt, rs);
  fill_path(p.x2, grid_steps(s, steps_per_unit), d, p.dt, rs);
  return p;
}

RadialFn radial_of(const CovarianceModel& gamma1) {
  require(gamma1.finite_at_zero(), ErrorCode::invalid_argument,
          "pathwise beta needs a finite-valued gamma1; riesz moments use the spectral route");
  if (gamma1.kind() == ModelKind::gaussian) {
    const double inv = 1.0 / (gamma1.scale() * gamma1.scale());
    return [inv](double r2) { return std::exp(-r2 * inv); };
  }
  return [gamma1](double r2) { return gamma1.gamma_radial(std::sqrt(r2)); };
}

double beta_functional(const BMPathPair& pair, std::span<const double> z, const TemporalKernel& gamma0,
                       const RadialFn& gamma1) {
  const int d = pair.d;
  require(static_cast<int>(z.size()) == d, ErrorCode::invalid_argument, "beta_functional: z has the wrong dimension");
  const std::size_t n1 = pair.n1();
  const std::size_t n2 = pair.n2();
  const std::size_t nl = std::max(n1, n2);
  std::vector<double> w(nl + 1);
  for (std::size_t k = 0; k <= nl; ++k) {
    const double kk = static_cast<double>(k);
    w[k] = k == 0 ? 2.0 * gamma0.Phi(pair.dt)
                  : gamma0.Phi((kk + 1.0) * pair.dt) - 2.0 * gamma0.Phi(kk * pair.dt) + gamma0.Phi((kk - 1.0) * pair.dt);
  }
  double total = 0.0;
  std::vector<double> u(d);
  auto term = [&](std::size_t i, std::size_t j) {
    double r2 = 0.0;
    for (int k = 0; k < d; ++k) {
      const double v = pair.x1[i * d + k] - pair.x2[j * d + k] + z[k];
      r2 += v * v;
    }
    return gamma1(r2);
  };
  if (gamma0.is_delta()) {
    const std::size_t m = std::min(n1, n2);
    for (std::size_t i = 0; i < m; ++i) total += w[0] * term(i, i);
  } else {
    for (std::size_t i = 0; i < n1; ++i) {
      double row = 0.0;
      for (std::size_t j = 0; j < n2; ++j) row += w[i > j ? i - j : j - i] * term(i, j);
      total += row;
    }
  }
  require(std::isfinite(total), ErrorCode::numerical_failure, "beta_functional: non-finite gamma1 evaluation");
  return total;
}

double beta_functional(const BMPathPair& pair, std::span<const double> z, const TemporalKernel& gamma0,
                       const CovarianceModel& gamma1) {
  return beta_functional(pair, z, gamma0, radial_of(gamma1));
}

// ---------------------------------------------------------------------------

namespace {

MCEstimate summarize(const std::vector<double>& v) {
  const double n = static_cast<double>(v.size());
  double m = 0.0;
  for (double x : v) m += x;
  m /= n;
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  MCEstimate e;
  e.value = m;
  e.n = v.size();
  // The delete-one jackknife SE of a mean is s / sqrt(n).
  e.std_error = v.size() > 1 ? std::sqrt(ss / (n - 1.0) / n) : kInf;
  e.inconclusive = !(e.std_error <= 0.5 * std::abs(e.value));
  return e;
}

// int h(beta_{s,t}(z)) dz by importance sampling in z with fresh path pairs
// per z draw.
MCEstimate z_integral(double s, double t, const SHEConfig& cfg, const std::function<double(double)>& h) {
  cfg.validate();
  const int d = cfg.dim();
  const RadialFn g1 = radial_of(cfg.gamma1);
  const double scale =
      cfg.z_proposal_scale > 0.0 ? cfg.z_proposal_scale : std::sqrt(s + t) + 3.0 * cfg.gamma1.correlation_length();
  const std::size_t per = cfg.n_paths / cfg.n_z;
  std::vector<double> vals(cfg.n_z);
  parallel_for(cfg.n_z, [&](std::size_t k) {
    RandomStream zs(cfg.master_seed, StreamTag::z_proposal, k);
    std::vector<double> z(d);
    for (double& v : z) v = scale * zs.normal();
    const double q = std::pow(2.0 * M_PI * scale * scale, -0.5 * d) * std::exp(-sq_norm(z) / (2.0 * scale * scale));
    double acc = 0.0;
    for (std::size_t j = 0; j < per; ++j) {
      RandomStream bs(cfg.master_seed, StreamTag::brownian, k * per + j);
      const auto pair = sample_path_pair(d, t, s, cfg.bm_steps, bs);
      acc += h(beta_functional(pair, z, cfg.gamma0, g1));
    }
    vals[k] = acc / per / q;
  });
  return summarize(vals);
}

MCEstimate scaled(MCEstimate e, double c) {
  e.value *= c;
  e.std_error *= std::abs(c);
  return e;
}

}  // namespace

MCEstimate sigma_limit(double s, double t, const SHEConfig& cfg) {
  require(s > 0.0 && t > 0.0, ErrorCode::invalid_argument, "sigma_limit: times must be positive");
  require(cfg.gamma1.integrable(), ErrorCode::invalid_argument, "sigma_limit needs gamma1 with finite total mass");
  const auto e = z_integral(s, t, cfg, [](double b) { return std::expm1(b); });
  return scaled(e, ball_volume(cfg.dim()));
}

MCEstimate first_order_integral(double s, double t, const SHEConfig& cfg) {
  require(s > 0.0 && t > 0.0, ErrorCode::invalid_argument, "first_order_integral: times must be positive");
  return z_integral(s, t, cfg, [](double b) { return b; });
}

double first_order_closed_form(double s, double t, const SHEConfig& cfg) {
  return cfg.gamma0.double_integral(t, s) * cfg.gamma1.gamma_integral();
}

MCEstimate moment_integral(double t, int p, const SHEConfig& cfg) {
  require(p >= 1, ErrorCode::invalid_argument, "moment_integral: p must be >= 1");
  require(t > 0.0, ErrorCode::invalid_argument, "moment_integral: t must be positive");
  return z_integral(t, t, cfg, [p](double b) { return std::pow(b, p); });
}

MCEstimate sigma_p(double t, int p, const SHEConfig& cfg) {
  return scaled(moment_integral(t, p, cfg), ball_volume(cfg.dim()) / std::tgamma(p + 1.0));
}

namespace {

// Radial proposal for Riesz frequencies: density beta r^{beta-1} on (0, 1]
// and kappa r^{-1-kappa} beyond, each with probability 1/2.
struct RieszRadial {
  double beta;
  double kappa = 0.5;
  double draw(RandomStream& rs) const {
    const double u = rs.uniform();
    return rs.uniform() < 0.5 ? std::pow(u, 1.0 / beta) : std::pow(u, -1.0 / kappa);
  }
  double density(double r) const {
    return r <= 1.0 ? 0.5 * beta * std::pow(r, beta - 1.0) : 0.5 * kappa * std::pow(r, -1.0 - kappa);
  }
};

// Uniform direction on the unit sphere of R^d.
void draw_direction(RandomStream& rs, std::span<double> out) {
  if (out.size() == 1) {
    out[0] = rs.uniform() < 0.5 ? -1.0 : 1.0;
    return;
  }
  double n2 = 0.0;
  for (double& v : out) {
    v = rs.normal();
    n2 += v * v;
  }
  const double inv = 1.0 / std::sqrt(n2);
  for (double& v : out) v *= inv;
}

// Time weight prod gamma0(s_j - r_j) times the volume of the sampled region;
// fills s and r (r = s for the delta kernel).
double draw_times(const TemporalKernel& g0, double t, std::span<double> s, std::span<double> r, RandomStream& rs) {
  double w = 1.0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    s[j] = t * rs.uniform();
    if (g0.is_delta()) {
      r[j] = s[j];
      w *= t;
    } else {
      r[j] = t * rs.uniform();
      w *= t * t * g0.gamma0_at(s[j] - r[j]);
    }
  }
  return w;
}

// sum_{i,j} min(s_i, s_j) xi_i . xi_j
double min_form(std::span<const double> s, const std::vector<double>& xi, int d) {
  const std::size_t p = s.size();
  double q = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t j = 0; j < p; ++j) {
      double dot = 0.0;
      for (int k = 0; k < d; ++k) dot += xi[i * d + k] * xi[j * d + k];
      q += std::min(s[i], s[j]) * dot;
    }
  }
  return q;
}

MCEstimate riesz_moment_spectral(double t, std::span<const double> z, int p, const SHEConfig& cfg) {
  const int d = cfg.dim();
  const auto& g1 = cfg.gamma1;
  const RieszRadial prop{g1.beta()};
  const double area = sphere_area(d);
  const std::size_t n = cfg.n_spectral;
  constexpr std::size_t block = 1024;
  const std::size_t nb = (n + block - 1) / block;
  std::vector<double> s1(nb), s2(nb);
  parallel_for(nb, [&](std::size_t b) {
    RandomStream rs(cfg.master_seed, StreamTag::spectral_mc, b);
    std::vector<double> s(p), r(p), xi(p * d), dir(d);
    double a1 = 0.0, a2 = 0.0;
    for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
      double w = draw_times(cfg.gamma0, t, s, r, rs);
      double phase = 0.0;
      for (int j = 0; j < p; ++j) {
        const double rad = prop.draw(rs);
        draw_direction(rs, dir);
        for (int k = 0; k < d; ++k) {
          xi[j * d + k] = rad * dir[k];
          phase += z[k] * xi[j * d + k];
        }
        // phi(xi) / q(xi) with q(xi) = density(rad) / (area rad^{d-1}).
        w *= g1.phi_radial(rad) * area * std::pow(rad, d - 1) / prop.density(rad);
      }
      const double v = w * std::cos(phase) * std::exp(-0.5 * (min_form(s, xi, d) + min_form(r, xi, d)));
      a1 += v;
      a2 += v * v;
    }
    s1[b] = a1;
    s2[b] = a2;
  });
  double a1 = 0.0, a2 = 0.0;
  for (std::size_t b = 0; b < nb; ++b) {
    a1 += s1[b];
    a2 += s2[b];
  }
  const double nn = static_cast<double>(n);
  MCEstimate e;
  e.value = a1 / nn;
  e.std_error = std::sqrt(std::max(0.0, a2 / nn - e.value * e.value) / (nn - 1.0));
  e.n = n;
  e.inconclusive = !(e.std_error <= 0.5 * std::abs(e.value));
  return e;
}

}  // namespace

MCEstimate moment_beta_p(double t, std::span<const double> z, int p, const SHEConfig& cfg) {
  require(p >= 1, ErrorCode::invalid_argument, "moment_beta_p: p must be >= 1");
  require(t > 0.0, ErrorCode::invalid_argument, "moment_beta_p: t must be positive");
  cfg.validate();
  require(static_cast<int>(z.size()) == cfg.dim(), ErrorCode::invalid_argument, "moment_beta_p: z dimension");
  if (cfg.gamma1.kind() == ModelKind::riesz) return riesz_moment_spectral(t, z, p, cfg);
  const RadialFn g1 = radial_of(cfg.gamma1);
  std::vector<double> vals(cfg.n_paths);
  parallel_for(cfg.n_paths, [&](std::size_t i) {
    RandomStream bs(cfg.master_seed, StreamTag::brownian, i);
    const auto pair = sample_path_pair(cfg.dim(), t, t, cfg.bm_steps, bs);
    vals[i] = std::pow(beta_functional(pair, z, cfg.gamma0, g1), p);
  });
  return summarize(vals);
}

// ---------------------------------------------------------------------------

double tail_C(const CovarianceModel& gamma1, double N, TailMode mode) {
  require(N > 0.0, ErrorCode::invalid_argument, "tail_C: N must be positive");
  const int d = gamma1.dim();
  const double area = sphere_area(d);
  if (gamma1.kind() == ModelKind::riesz) {
    const double c = gamma1.riesz_constant();
    const double beta = gamma1.beta();
    double v = area * c * std::pow(N, beta - 2.0) / (2.0 - beta);
    if (mode == TailMode::modified) v += area * c * c * std::pow(N, 2.0 * beta - d - 2.0) / (d + 2.0 - 2.0 * beta);
    return v;
  }
  auto f = [&](double r) {
    const double p = gamma1.phi_radial(r);
    return std::pow(r, d - 3) * (mode == TailMode::modified ? p + p * p : p);
  };
  return area * quad::exp_sinh(f, N).value;
}

double tail_D(const CovarianceModel& gamma1, double N, TailMode mode) {
  require(N > 0.0, ErrorCode::invalid_argument, "tail_D: N must be positive");
  const int d = gamma1.dim();
  const double area = sphere_area(d);
  if (gamma1.kind() == ModelKind::riesz) {
    const double c = gamma1.riesz_constant();
    const double beta = gamma1.beta();
    double v = area * c * std::pow(N, beta) / beta;
    if (mode == TailMode::modified) {
      const double a = 2.0 * beta - d;
      v += a > 0.0 ? area * c * c * std::pow(N, a) / a : kInf;
    }
    return v;
  }
  double v = gamma1.phi_shell_mass(0.0, N);
  if (mode == TailMode::modified) {
    auto f = [&](double r) {
      const double p = gamma1.phi_radial(r);
      return std::pow(r, d - 1) * p * p;
    };
    v += area * quad::gauss_kronrod(f, 0.0, N).value;
  }
  return v;
}

TailBound chaos_tail_bound(const CovarianceModel& gamma1, const TemporalKernel& gamma0, double t, double N,
                           TailMode mode, int max_p) {
  require(t > 0.0, ErrorCode::invalid_argument, "chaos_tail_bound: t must be positive");
  require(N > 0.0, ErrorCode::invalid_argument, "chaos_tail_bound: N must be positive");
  require(max_p >= 2, ErrorCode::invalid_argument, "chaos_tail_bound: max_p must be >= 2");
  require(dalang_check(gamma1).finite, ErrorCode::invalid_config, "chaos_tail_bound: Dalang's condition fails");
  TailBound b;
  b.mode = mode;
  b.requested_N = N;
  b.Gamma_t = gamma0.Gamma_t(t);
  b.phi_sup = mode == TailMode::modified ? 1.0 : gamma1.phi_sup();
  auto gate = [&](double n) { return 4.0 * b.Gamma_t * tail_C(gamma1, n, mode) < 1.0; };
  b.gate_at_requested = gate(N);
  b.N = N;
  if (!b.gate_at_requested) {
    double lo = N;
    double hi = N;
    constexpr double kMaxN = 1e8;
    while (!gate(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > kMaxN) {
        fail(ErrorCode::numerical_failure,
             "chaos_tail_bound: no N <= 1e8 satisfies 4 Gamma_t C_N < 1 (Gamma_t = " + std::to_string(b.Gamma_t) + ")");
      }
    }
    for (int it = 0; it < 100 && hi - lo > 1e-12 * hi; ++it) {
      const double mid = std::sqrt(lo * hi);
      (gate(mid) ? hi : lo) = mid;
    }
    b.N = hi;
  }
  b.C_N = tail_C(gamma1, b.N, mode);
  b.D_N = tail_D(gamma1, b.N, mode);
  const int d = gamma1.dim();
  const double tp = std::pow(2.0 * M_PI, d);
  const double ex = std::exp(t * b.D_N / (2.0 * b.C_N));
  for (int p = 1; p <= max_p; ++p) {
    b.per_p.push_back(b.phi_sup * tp * std::pow(b.Gamma_t, p) * std::tgamma(p + 1.0) * t *
                      std::pow(4.0 * b.C_N, p - 1) * ex);
  }
  const double g = 4.0 * b.Gamma_t * b.C_N;
  b.geometric_sum = 4.0 * b.phi_sup * tp * t * b.C_N * b.Gamma_t * b.Gamma_t / (1.0 - g) * ex;
  return b;
}

// ---------------------------------------------------------------------------

ChaosShareResult riesz_second_chaos_share(double t, const TemporalKernel& gamma0, std::span<const double> radii,
                                          const SHEConfig& cfg) {
  require(t > 0.0, ErrorCode::invalid_argument, "riesz_second_chaos_share: t must be positive");
  require(!radii.empty(), ErrorCode::invalid_argument, "riesz_second_chaos_share: no radii");
  const auto& g1 = cfg.gamma1;
  require(g1.kind() == ModelKind::riesz, ErrorCode::invalid_argument, "riesz_second_chaos_share needs a riesz gamma1");
  for (double R : radii) require(R > 0.0, ErrorCode::invalid_argument, "riesz_second_chaos_share: R must be positive");
  const int d = g1.dim();
  const double beta = g1.beta();
  const double area = sphere_area(d);
  const std::size_t nr = radii.size();
  const std::size_t n = cfg.n_spectral;
  // Log-Cauchy radial density in R^d (per unit volume).
  auto logcauchy = [area, d](double r) {
    const double l = std::log(r);
    return 1.0 / (M_PI * r * (1.0 + l * l)) / (area * std::pow(r, d - 1));
  };
  std::vector<double> vals(n * nr);
  constexpr std::size_t block = 1024;
  const std::size_t nb = (n + block - 1) / block;
  parallel_for(nb, [&](std::size_t b) {
    RandomStream rs(cfg.master_seed, StreamTag::spectral_mc, b);
    std::vector<double> s(2), r(2), zeta(d), dir1(d), xi(2 * d), eta(d);
    for (std::size_t i = b * block; i < std::min(n, (b + 1) * block); ++i) {
      const double wt = draw_times(gamma0, t, s, r, rs);
      // zeta: radial BetaPrime(d, 1), density d rho^{d-1} (1 + rho)^{-d-1}.
      const double x = std::pow(rs.uniform(), 1.0 / d);
      const double rho = x / (1.0 - x);
      draw_direction(rs, zeta);
      for (double& v : zeta) v *= rho;
      const double q_zeta = d * std::pow(1.0 + rho, -d - 1.0) / area;
      const double ell = ell_R_radial(d, 1.0, rho);
      // xi_1: mixture of log-Cauchy radial proposals centred at 0 and at zeta / R.
      const bool at_eta = rs.uniform() < 0.5;
      const double rad = std::exp(std::tan(M_PI * (rs.uniform() - 0.5)));
      draw_direction(rs, dir1);
      for (std::size_t k = 0; k < nr; ++k) {
        const double R = radii[k];
        for (int c = 0; c < d; ++c) eta[c] = zeta[c] / R;
        double n1 = 0.0, n2 = 0.0, nd = 0.0;
        for (int c = 0; c < d; ++c) {
          xi[c] = (at_eta ? eta[c] : 0.0) + rad * dir1[c];
          xi[d + c] = eta[c] - xi[c];
          n1 += xi[c] * xi[c];
          n2 += xi[d + c] * xi[d + c];
        }
        nd = std::sqrt(n2);
        n1 = std::sqrt(n1);
        const double q_xi = 0.5 * logcauchy(n1) + 0.5 * logcauchy(nd);
        const double q = min_form(s, xi, d) + min_form(r, xi, d);
        const double v = wt * ell / q_zeta * g1.phi_radial(n1) * g1.phi_radial(nd) / q_xi * std::exp(-0.5 * q);
        const double pref = 0.5 * std::pow(2.0 * M_PI, d) * ball_volume(d) * std::pow(R, beta - d);
        vals[i * nr + k] = std::isfinite(v) ? pref * v : 0.0;
      }
    }
  });
  ChaosShareResult out;
  const double nn = static_cast<double>(n);
  for (std::size_t k = 0; k < nr; ++k) {
    double a = 0.0, q = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      a += vals[i * nr + k];
      q += vals[i * nr + k] * vals[i * nr + k];
    }
    const double m = a / nn;
    out.per_R.push_back({radii[k], m, std::sqrt(std::max(0.0, q / nn - m * m) / (nn - 1.0))});
  }
  double a = 0.0, q = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dv = vals[i * nr] - vals[i * nr + nr - 1];
    a += dv;
    q += dv * dv;
  }
  out.drop = a / nn;
  out.drop_se = std::sqrt(std::max(0.0, q / nn - out.drop * out.drop) / (nn - 1.0));
  return out;
}

// ---------------------------------------------------------------------------

namespace {

double whole_line(const std::function<double(double)>& f, std::vector<double> brk, bool singular) {
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end()), brk.end());
  quad::Options opt;
  opt.rel_tol = 1e-10;
  return quad::piecewise(f, -kInf, kInf, brk, singular, opt).value;
}

}  // namespace

InequalitySides convolution_inequality_two(const CovarianceModel& gamma1, double s, double x, double y) {
  require(gamma1.dim() == 1 && s > 0.0, ErrorCode::invalid_argument, "convolution inequality: d = 1 and s > 0");
  auto phi = [&](double k) { return gamma1.phi_radial(std::abs(k)); };
  const bool sing = !gamma1.finite_at_zero();
  InequalitySides out;
  out.lhs = whole_line([&](double e) { return std::exp(-s * e * e) * phi(e - x) * phi(y - e); }, {0.0, x, y}, sing);
  out.rhs = whole_line([&](double e) { return std::exp(-s * e * e) * phi(e) * phi(e); }, {0.0}, sing);
  return out;
}

InequalitySides convolution_inequality_one(const CovarianceModel& gamma1, double s, double x) {
  require(gamma1.dim() == 1 && s > 0.0, ErrorCode::invalid_argument, "convolution inequality: d = 1 and s > 0");
  auto phi = [&](double k) { return gamma1.phi_radial(std::abs(k)); };
  const bool sing = !gamma1.finite_at_zero();
  InequalitySides out;
  out.lhs = whole_line([&](double e) { return std::exp(-s * e * e) * phi(e - x); }, {0.0, x}, sing);
  out.rhs = whole_line([&](double e) { return std::exp(-s * e * e) * phi(e); }, {0.0}, sing);
  return out;
}

}  // namespace chaosavg
