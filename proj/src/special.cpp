#include "chaosavg/special.hpp"

#include <fftw3.h>

#include <algorithm>
#include <boost/math/special_functions/beta.hpp>
#include <cmath>
#include <complex>
#include <limits>
#include <map>
#include <mutex>
#include <numeric>

#include "chaosavg/error.hpp"
#include "chaosavg/quadrature.hpp"
#include "internal.hpp"

namespace chaosavg {

std::mutex& detail::fftw_planner_mutex() {
  static std::mutex mu;
  return mu;
}

namespace {

constexpr int kBesselNodes = 64;

struct BesselRule {
  quad::Rule rule;
  double prefactor = 0.0;  // 1 / (sqrt(pi) Gamma(p + 1/2))
};

const BesselRule& bessel_rule(double p) {
  static std::mutex mu;
  static std::map<double, BesselRule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(p);
  if (it == cache.end()) {
    BesselRule r;
    r.rule = quad::gauss_jacobi_symmetric(kBesselNodes, p - 0.5);
    r.prefactor = 1.0 / (std::sqrt(M_PI) * std::tgamma(p + 0.5));
    it = cache.emplace(p, std::move(r)).first;
  }
  return it->second;
}

}  // namespace

double ball_volume(int d) {
  require(d >= 1, ErrorCode::invalid_argument, "ball_volume: dimension must be >= 1, got " + std::to_string(d));
  return std::pow(M_PI, 0.5 * d) / std::tgamma(1.0 + 0.5 * d);
}

double sphere_area(int d) { return d * ball_volume(d); }

double ball_overlap_volume(int d, double a, double r) {
  r = std::abs(r);
  if (r >= 2.0 * a) return 0.0;
  if (d == 1) return 2.0 * a - r;
  // Two caps of height a - r/2; the cap fraction is a regularized incomplete beta.
  const double x = 1.0 - (r / (2.0 * a)) * (r / (2.0 * a));
  return ball_volume(d) * std::pow(a, d) * boost::math::ibeta(0.5 * (d + 1), 0.5, x);
}

double bessel_j_quadrature(double p, double x) {
  require(p > 0.0, ErrorCode::invalid_argument, "bessel_j: order must be positive");
  const double ax = std::abs(x);
  if (ax == 0.0) return 0.0;
  const BesselRule& br = bessel_rule(p);
  double sum = 0.0;
  for (int i = 0; i < kBesselNodes; ++i) sum += br.rule.weights[i] * std::cos(ax * br.rule.nodes[i]);
  return br.prefactor * std::pow(0.5 * ax, p) * sum;
}

double bessel_j_asymptotic(double p, double x) {
  require(p > 0.0, ErrorCode::invalid_argument, "bessel_j: order must be positive");
  const double ax = std::abs(x);
  const double mu = 4.0 * p * p;
  double P = 1.0;
  double Q = 0.0;
  double term = 1.0;
  double prev = std::numeric_limits<double>::infinity();
  for (int k = 1; k < 200; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (8.0 * k * ax);
    const double mag = std::abs(term);
    if (mag == 0.0 || mag > prev) break;
    prev = mag;
    // k = 1, 2, 3, 4, ... contribute +Q, -P, -Q, +P, ...
    switch (k % 4) {
      case 1: Q += term; break;
      case 2: P -= term; break;
      case 3: Q -= term; break;
      case 0: P += term; break;
    }
    if (mag < 1e-17 * (std::abs(P) + std::abs(Q))) break;
  }
  const double phase = (2.0 * p + 1.0) * M_PI / 4.0;
  const double cx = std::cos(ax);
  const double sx = std::sin(ax);
  const double cp = std::cos(phase);
  const double sp = std::sin(phase);
  const double cos_chi = cx * cp + sx * sp;
  const double sin_chi = sx * cp - cx * sp;
  return std::sqrt(2.0 / (M_PI * ax)) * (P * cos_chi - Q * sin_chi);
}

double bessel_j(double p, double x) {
  require(p > 0.0, ErrorCode::invalid_argument, "bessel_j: order must be positive");
  const double ax = std::abs(x);
  const double v = ax <= kBesselCrossover ? bessel_j_quadrature(p, ax) : bessel_j_asymptotic(p, ax);
  if (x >= 0.0) return v;
  // Real part of the principal branch, exact (-1)^p for integer orders.
  return std::cos(M_PI * p) * v;
}

double ball_fourier_radial(int d, double R, double r) {
  require(R > 0.0, ErrorCode::invalid_argument, "ball_fourier: R must be positive");
  const double vol = ball_volume(d);
  r = std::abs(r);
  if (r == 0.0) return vol * std::pow(R, d);
  const double nu = 0.5 * d;
  return std::pow(2.0 * M_PI * R / r, nu) * bessel_j(nu, R * r);
}

double ball_fourier(int d, double R, std::span<const double> xi) {
  require(static_cast<int>(xi.size()) == d, ErrorCode::invalid_argument, "ball_fourier: point dimension mismatch");
  double s = 0.0;
  for (double v : xi) s += v * v;
  return ball_fourier_radial(d, R, std::sqrt(s));
}

double ell_R_radial(int d, double R, double r) {
  require(R > 0.0, ErrorCode::invalid_argument, "ell_R: R must be positive");
  const double vol = ball_volume(d);
  const double nu = 0.5 * d;
  r = std::abs(r);
  const double x = R * r;
  if (x < 1e-6) {
    // J_nu(x) = (x/2)^nu / Gamma(nu+1) (1 - x^2 / (4(nu+1)) + ...).
    const double g = std::tgamma(nu + 1.0);
    const double corr = 1.0 - x * x / (4.0 * (nu + 1.0));
    return std::pow(R / 2.0, d) * corr * corr / (g * g * vol);
  }
  const double j = bessel_j(nu, x);
  return j * j / (vol * std::pow(r, d));
}

double ell_R(int d, double R, std::span<const double> x) {
  require(static_cast<int>(x.size()) == d, ErrorCode::invalid_argument, "ell_R: point dimension mismatch");
  double s = 0.0;
  for (double v : x) s += v * v;
  return ell_R_radial(d, R, std::sqrt(s));
}

double integrate_against_ell(int d, double R, const std::function<double(double)>& f, const EllIntegralOptions& opt) {
  require(R > 0.0, ErrorCode::invalid_argument, "integrate_against_ell: R must be positive");
  const double nu = 0.5 * d;
  auto integrand = [&](double rho) {
    if (rho <= 0.0) return 0.0;
    const double j = bessel_j(nu, rho);
    return j * j / rho * f(rho / R);
  };
  quad::Options o;
  o.rel_tol = 1e-11;
  o.abs_tol = 1e-16;
  o.max_depth = 10;
  o.throw_on_failure = false;
  double total = 0.0;
  // First panel: tanh-sinh tolerates an integrable singularity of f at 0.
  total += quad::tanh_sinh(integrand, 0.0, 1.0, o).value;
  double a = 1.0;
  double b = M_PI;
  while (a < opt.rho_max) {
    b = std::min(b, opt.rho_max);
    total += quad::gauss_kronrod(integrand, a, b, o).value;
    a = b;
    b += M_PI;
  }
  // Tail: J^2(rho) averages to 1 / (pi rho).
  auto tail = [&](double r) { return f(r) / (r * r); };
  const double tail_val = quad::gauss_kronrod(tail, opt.rho_max / R, std::numeric_limits<double>::infinity(), o).value;
  total += tail_val / (M_PI * R);
  return d * total;
}

std::size_t FrequencyGrid::size() const { return d == 1 ? static_cast<std::size_t>(n) : static_cast<std::size_t>(n) * n; }

std::vector<double> convolve_power(std::span<const double> phi, int p, const FrequencyGrid& grid) {
  require(p >= 2, ErrorCode::invalid_argument, "convolve_power: p must be >= 2");
  require(grid.d == 1 || grid.d == 2, ErrorCode::invalid_argument, "convolve_power: grid must be 1-D or 2-D");
  require(grid.n >= 1 && grid.n % 2 == 1 && grid.h > 0.0, ErrorCode::invalid_argument,
          "convolve_power: grid needs an odd point count and positive spacing");
  require(phi.size() == grid.size(), ErrorCode::invalid_argument, "convolve_power: value count does not match grid");
  for (double v : phi) {
    require(std::isfinite(v), ErrorCode::invalid_input, "convolve_power: non-finite spectral density value on grid");
  }
  const int n = grid.n;
  const int full = p * (n - 1) + 1;
  int m = 1;
  while (m < full) m *= 2;
  const int half = (n - 1) / 2;
  const int centre = p * half;
  const double scale = std::pow(grid.h, grid.d * (p - 1));

  std::mutex& plan_mu = detail::fftw_planner_mutex();
  std::vector<double> out(grid.size());
  if (grid.d == 1) {
    const int mc = m / 2 + 1;
    double* in = fftw_alloc_real(m);
    fftw_complex* spec = fftw_alloc_complex(mc);
    fftw_plan fwd, bwd;
    {
      std::lock_guard lock(plan_mu);
      fwd = fftw_plan_dft_r2c_1d(m, in, spec, FFTW_ESTIMATE);
      bwd = fftw_plan_dft_c2r_1d(m, spec, in, FFTW_ESTIMATE);
    }
    std::fill(in, in + m, 0.0);
    std::copy(phi.begin(), phi.end(), in);
    fftw_execute(fwd);
    for (int k = 0; k < mc; ++k) {
      std::complex<double> z(spec[k][0], spec[k][1]);
      z = std::pow(z, p);
      spec[k][0] = z.real();
      spec[k][1] = z.imag();
    }
    fftw_execute(bwd);
    for (int i = 0; i < n; ++i) out[i] = in[centre - half + i] * scale / m;
    {
      std::lock_guard lock(plan_mu);
      fftw_destroy_plan(fwd);
      fftw_destroy_plan(bwd);
    }
    fftw_free(in);
    fftw_free(spec);
  } else {
    const int mc = m / 2 + 1;
    double* in = fftw_alloc_real(static_cast<std::size_t>(m) * m);
    fftw_complex* spec = fftw_alloc_complex(static_cast<std::size_t>(m) * mc);
    fftw_plan fwd, bwd;
    {
      std::lock_guard lock(plan_mu);
      fwd = fftw_plan_dft_r2c_2d(m, m, in, spec, FFTW_ESTIMATE);
      bwd = fftw_plan_dft_c2r_2d(m, m, spec, in, FFTW_ESTIMATE);
    }
    std::fill(in, in + static_cast<std::size_t>(m) * m, 0.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) in[static_cast<std::size_t>(i) * m + j] = phi[static_cast<std::size_t>(i) * n + j];
    fftw_execute(fwd);
    for (std::size_t k = 0; k < static_cast<std::size_t>(m) * mc; ++k) {
      std::complex<double> z(spec[k][0], spec[k][1]);
      z = std::pow(z, p);
      spec[k][0] = z.real();
      spec[k][1] = z.imag();
    }
    fftw_execute(bwd);
    const double norm = static_cast<double>(m) * m;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        out[static_cast<std::size_t>(i) * n + j] =
            in[static_cast<std::size_t>(centre - half + i) * m + (centre - half + j)] * scale / norm;
    {
      std::lock_guard lock(plan_mu);
      fftw_destroy_plan(fwd);
      fftw_destroy_plan(bwd);
    }
    fftw_free(in);
    fftw_free(spec);
  }
  return out;
}

double discrete_lq_norm(std::span<const double> phi, double q, const FrequencyGrid& grid) {
  require(q > 0.0, ErrorCode::invalid_argument, "discrete_lq_norm: q must be positive");
  double s = 0.0;
  for (double v : phi) s += std::pow(std::abs(v), q);
  return std::pow(std::pow(grid.h, grid.d) * s, 1.0 / q);
}

}  // namespace chaosavg
