#pragma once

// Stochastic heat equation side: heat kernel and chaos kernels, the exact
// first-chaos covariance, kappa_beta, Brownian path pairs and the
// intersection functional beta_{s,t}(z), Monte Carlo z-integrals for
// Sigma_{s,t} and moments of beta, chaos tail bounds and the Riesz
// second-chaos share.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "chaosavg/kernels.hpp"
#include "chaosavg/rng.hpp"
#include "chaosavg/special.hpp"

namespace chaosavg {

// G(t, x) = (2 pi t)^{-d/2} exp(-|x|^2 / (2t)).
double heat_kernel(double t, std::span<const double> x);
double heat_kernel_radial(int d, double t, double r);

// f_{t,x,n}(s, y): (1/n!) G(t - s_1, x - y_1) prod G(s_i - s_{i+1}, y_i - y_{i+1})
// after sorting the times decreasingly. y holds n points of dimension x.size().
double chaos_kernel_f(double t, std::span<const double> x, std::span<const double> s, std::span<const double> y);

struct DalangReport {
  double integral = 0.0;           // int phi / (1 + |xi|^2)
  bool finite = false;
  double modified_integral = 0.0;  // int (phi + phi^2) / (1 + |xi|^2)
  bool modified_finite = false;
};
DalangReport dalang_check(const CovarianceModel& gamma1);

struct SHEConfig {
  TemporalKernel gamma0 = TemporalKernel::constant(1.0);
  CovarianceModel gamma1 = CovarianceModel::gaussian(1);
  int bm_steps = 256;              // Brownian grid points per unit time
  std::size_t n_paths = 10000;     // path pairs in total, split evenly over the z draws
  std::size_t n_z = 1000;          // importance samples in z
  double z_proposal_scale = 0.0;   // 0 selects sqrt(s + t) + 3 * correlation length
  std::size_t n_spectral = 200000; // frequency samples for the Riesz routes
  std::uint64_t master_seed = 1;

  int dim() const { return gamma1.dim(); }
  void validate() const;
};

// T(a) = int_0^t int_0^s gamma0(u - v) exp(-a (t - u + s - v)) du dv.
double time_factor(const TemporalKernel& gamma0, double t, double s, double a);

// E[Pi_1 A_t(R) Pi_1 A_s(R)] by nested quadrature (time factor times the
// radial ell_R integral).
double first_chaos_covariance(const CovarianceModel& gamma1, const TemporalKernel& gamma0, double R, double t,
                              double s, const EllIntegralOptions& opt = {});

// int_{B_1^2} |x - y|^{-beta} dx dy.
double riesz_ball_integral(int d, double beta);
// (int_0^t int_0^t gamma0(r - v) dr dv) * riesz_ball_integral(d, beta).
double kappa_beta(int d, double beta, double t, const TemporalKernel& gamma0);

// Brownian positions at the cell midpoints of uniform grids on [0, t] and
// [0, s] with step dt; x1 holds n1 * d values, x2 holds n2 * d values.
struct BMPathPair {
  int d = 1;
  double dt = 0.0;
  double t = 0.0;
  double s = 0.0;
  std::vector<double> x1;
  std::vector<double> x2;
  std::size_t n1() const { return x1.size() / d; }
  std::size_t n2() const { return x2.size() / d; }
};

BMPathPair sample_path_pair(int d, double t, double s, int steps_per_unit, RandomStream& rs);

// Radial profile of gamma1 as a function of |u|^2.
using RadialFn = std::function<double(double)>;
RadialFn radial_of(const CovarianceModel& gamma1);

// Midpoint double sum with exact cell weights of gamma0:
// sum_{i,j} w(i - j) gamma1(X1_i - X2_j + z).
double beta_functional(const BMPathPair& pair, std::span<const double> z, const TemporalKernel& gamma0,
                       const RadialFn& gamma1);
double beta_functional(const BMPathPair& pair, std::span<const double> z, const TemporalKernel& gamma0,
                       const CovarianceModel& gamma1);

struct MCEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t n = 0;
  bool inconclusive = false;  // SE / |value| > 0.5
};

// omega_d int (E[exp(beta_{s,t}(z))] - 1) dz.
MCEstimate sigma_limit(double s, double t, const SHEConfig& cfg);
// int E[beta_{s,t}(z)] dz and its closed form (int int gamma0) * gamma1(R^d).
MCEstimate first_order_integral(double s, double t, const SHEConfig& cfg);
double first_order_closed_form(double s, double t, const SHEConfig& cfg);
// int E[beta_{t,t}(z)^p] dz.
MCEstimate moment_integral(double t, int p, const SHEConfig& cfg);
// sigma_p(t, t) = (omega_d / p!) int E[beta_{t,t}(z)^p] dz.
MCEstimate sigma_p(double t, int p, const SHEConfig& cfg);
// E[beta_{t,t}(z)^p]: path pairs for finite gamma1, the spectral
// representation with Monte Carlo over frequencies for riesz.
MCEstimate moment_beta_p(double t, std::span<const double> z, int p, const SHEConfig& cfg);

enum class TailMode { standard, modified };

struct TailBound {
  TailMode mode = TailMode::standard;
  double requested_N = 0.0;
  double N = 0.0;  // the N used below: requested_N when the gate holds there, else the bisection result
  bool gate_at_requested = false;
  double C_N = 0.0;
  double D_N = 0.0;
  double Gamma_t = 0.0;
  double phi_sup = 0.0;  // 1 in the modified mode
  std::vector<double> per_p;  // bound on int E[beta^p] dz for p = 1..per_p.size()
  double geometric_sum = 0.0;  // bound on sum_{p >= 2} (1/p!) int E[beta^p] dz
};

// C_N = int_{|xi| >= N} phi / |xi|^2, D_N = int_{|xi| <= N} phi; the modified
// mode replaces phi by phi + phi^2.
double tail_C(const CovarianceModel& gamma1, double N, TailMode mode);
double tail_D(const CovarianceModel& gamma1, double N, TailMode mode);
TailBound chaos_tail_bound(const CovarianceModel& gamma1, const TemporalKernel& gamma0, double t, double N,
                           TailMode mode = TailMode::standard, int max_p = 6);

struct ChaosShare {
  double R = 0.0;
  double value = 0.0;  // Var(Pi_2 A_t(R)) R^{-2d+beta}
  double std_error = 0.0;
};

struct ChaosShareResult {
  std::vector<ChaosShare> per_R;
  // first minus last radius, with the paired standard error of the difference
  double drop = 0.0;
  double drop_se = 0.0;
};

ChaosShareResult riesz_second_chaos_share(double t, const TemporalKernel& gamma0, std::span<const double> radii,
                                          const SHEConfig& cfg);

// Left and right sides of the two convolution inequalities (d = 1):
// int e^{-s eta^2} phi(eta - x) phi(y - eta) <= int e^{-s eta^2} phi(eta)^2 and
// int e^{-s eta^2} phi(eta - x) <= int e^{-s eta^2} phi(eta).
struct InequalitySides {
  double lhs = 0.0;
  double rhs = 0.0;
};
InequalitySides convolution_inequality_two(const CovarianceModel& gamma1, double s, double x, double y);
InequalitySides convolution_inequality_one(const CovarianceModel& gamma1, double s, double x);

}  // namespace chaosavg
