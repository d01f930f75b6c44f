#pragma once

// Spatial averages of Hermite functionals of stationary fields, the two
// limiting-variance routes (kappa_p in space, Psi_p in frequency), the
// Maruyama diagnostic and the CLT diagnostics.

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "chaosavg/field.hpp"
#include "chaosavg/functionals.hpp"
#include "chaosavg/rng.hpp"
#include "chaosavg/special.hpp"
#include "chaosavg/stats.hpp"

namespace chaosavg {

// h^d times the sum of values over sites with |x| <= R.
double spatial_average(std::span<const double> values, const GridSpec& grid, double R);

struct SamplerConfig {
  SamplerMethod method = SamplerMethod::circulant;
  double cutoff = 0.0;       // spectral only
  int modes_per_axis = 0;    // spectral only
  CirculantOptions circulant;
};

struct BMExperiment {
  CovarianceModel model = CovarianceModel::gaussian(1);
  HermiteSeries series{{{1, 1.0}}};
  std::vector<double> radii;
  GridSpec grid;
  std::size_t n_reps = 0;
  std::uint64_t master_seed = 0;
  SamplerConfig sampler;
};

// Rows: group = R, value = R^{-d/2} A(R) for the field standardized to unit
// variance, seed = the replication seed.
MCEnsemble run_bm(const BMExperiment& exp);

// omega_d sum_q c_q^2 q! int rho^q with rho = gamma / gamma(0).
double limit_variance_bm(const CovarianceModel& model, const HermiteSeries& series);
// int_{R^d} rho(x)^q dx; fails when the integral diverges.
double rho_power_integral(const CovarianceModel& model, int q);

struct KernelVariance {
  double sigma2 = 0.0;
  // Same sum with |f_p| in place of f_p: a finiteness certificate.
  double sigma2_abs = 0.0;
  std::vector<double> terms;  // omega_d p! ||f_p||^2_kappa per kernel
};

// ||f||^2_kappa = int dz <f, f>_{shifted by z}.
double kappa_norm_sq(const DiscreteKernel& f, const CovarianceModel& gamma);
KernelVariance limit_variance_kernel(const std::vector<DiscreteKernel>& kernels, const CovarianceModel& gamma);

// Spectral route (d = 1). The measure carries phi, its total mass and, when
// available, a sampler of the normalized density for the Monte Carlo paths.
struct SpectralMeasure {
  std::function<double(double)> phi;
  double total_mass = 0.0;
  std::function<double(RandomStream&)> draw;
  std::vector<double> singular_points;
  static SpectralMeasure from_model(const CovarianceModel& model);
};

// |F f_p|^2(xi_1..xi_p) = prod_j factor(xi_j), i.e. f_p = e^{tensor p}.
struct SpectralKernel {
  int p = 1;
  std::function<double(double)> factor;
  // e = 1_[a, b]: |e^|^2(xi) = 4 sin^2((b - a) xi / 2) / xi^2.
  static SpectralKernel indicator_power(int p, double a, double b);
};

struct SpectralRouteOptions {
  std::size_t mc_samples = 400000;  // p >= 3
  std::uint64_t seed = 1;
  EllIntegralOptions ell;
};

// Psi_p(x): integral of |F f_p|^2 phi^{tensor p} over the hyperplane
// xi_1 + ... + xi_p = x (p <= 2, quadrature).
double psi(const SpectralKernel& k, const SpectralMeasure& mu, double x);

struct SpectralVariance {
  double variance = 0.0;  // Var(G_{p,R})
  double variance_se = 0.0;
  double psi0 = 0.0;
  double psi0_se = 0.0;
  double limit = 0.0;  // p! (2 pi)^d omega_d Psi_p(0), the limit of Var / R^d
  double limit_se = 0.0;
};

SpectralVariance var_spectral(const SpectralKernel& k, const SpectralMeasure& mu, double R,
                              const SpectralRouteOptions& opt = {});

struct MaruyamaResult {
  double ratio = 0.0;  // h^{-d} int_{|tau| <= h} |F f_p|^2 d mu
  double std_error = 0.0;
  bool positive = false;  // false flags a failed Maruyama condition
};

MaruyamaResult maruyama_ratio(const SpectralKernel& k, const SpectralMeasure& mu, double h,
                              const SpectralRouteOptions& opt = {});

struct CLTReport {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double fourth_moment_ratio = 0.0;  // E[X^4] / Var^2, target 3
  double fourth_moment_ratio_se = 0.0;
  double ks_statistic = 0.0;  // Kolmogorov-Smirnov proxy, not a total-variation distance
  double ks_p_value = 0.0;
  std::string sigma_source;  // "theory" or "ensemble"
};

// Fails with insufficient-data below 30 values. When sigma2 is given the KS
// test standardizes with it, else with the ensemble variance.
CLTReport clt_diagnostics(std::span<const double> values, std::optional<double> sigma2 = std::nullopt);

// g_{p,R}(y) = int_{[-R, R]} prod_j e(y_j - x) dx for e = 1_[0,1], on a
// trapezoid axis over [-R, R + 1] with spacing h.
DiscreteKernel window_kernel(int p, double R, double h);

struct ContractionNorm {
  double R = 0.0;
  int r = 1;
  double norm = 0.0;     // ||g tensor_r g||
  double sigma2 = 0.0;   // p! ||g||^2 = Var(G_{p,R})
  double normalized = 0.0;
};

std::vector<ContractionNorm> contraction_decay(const CovarianceModel& gamma, int p, std::span<const double> radii,
                                               double h);

}  // namespace chaosavg
