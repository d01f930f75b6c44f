#pragma once

// Covariance catalog. Fourier convention: gamma(x) = int exp(-i x.xi) phi(xi) dxi,
// so int gamma = (2 pi)^d phi(0) and gamma(0) = int phi.

#include <span>
#include <string>

namespace chaosavg {

enum class ModelKind { gaussian, exponential, bump, riesz };

class CovarianceModel {
 public:
  // gamma(x) = exp(-|x|^2 / scale^2)
  static CovarianceModel gaussian(int d, double scale = 1.0);
  // gamma(x) = exp(-|x| / scale)
  static CovarianceModel exponential(int d, double scale = 1.0);
  // gamma(x) = vol(B_a intersected with B_a(x)) / vol(B_a), spectral density ell_a
  static CovarianceModel bump(int d, double radius = 1.0);
  // gamma(x) = |x|^{-beta}, 0 < beta < min(2, d)
  static CovarianceModel riesz(int d, double beta);
  // Catalog id such as "gaussian:scale=1" or "riesz:beta=0.5".
  static CovarianceModel parse(const std::string& id, int d);

  int dim() const { return d_; }
  ModelKind kind() const { return kind_; }
  double scale() const { return scale_; }
  double beta() const { return beta_; }
  std::string id() const;

  bool integrable() const { return kind_ != ModelKind::riesz; }
  bool finite_at_zero() const { return kind_ != ModelKind::riesz; }

  double gamma_radial(double r) const;
  double gamma_at(std::span<const double> x) const;
  double phi_radial(double k) const;
  double phi_at(std::span<const double> xi) const;

  // gamma(0) = total spectral mass (infinite for riesz).
  double gamma_zero() const;
  // int gamma over R^d = (2 pi)^d phi(0) (infinite for riesz).
  double gamma_integral() const;
  // sup phi = phi(0) for every catalog model (infinite for riesz).
  double phi_sup() const;
  // Spectral mass of the shell k0 <= |xi| <= k1.
  double phi_shell_mass(double k0, double k1) const;
  // Length scale used for proposal widths.
  double correlation_length() const;
  // c_{d,beta} in phi = c |xi|^{beta-d}; zero for other kinds.
  double riesz_constant() const { return riesz_c_; }

 private:
  CovarianceModel(int d, ModelKind kind, double scale, double beta);
  int d_;
  ModelKind kind_;
  double scale_;
  double beta_;
  double riesz_c_ = 0.0;
};

// Numerical c_{d,beta}: matches both sides of Parseval against exp(-|x|^2/2).
double riesz_constant_numeric(int d, double beta);

enum class TemporalKind { constant, delta, exponential, power };

class TemporalKernel {
 public:
  static TemporalKernel constant(double value = 1.0);
  static TemporalKernel delta();
  static TemporalKernel exponential(double scale);
  // gamma0(u) = |u|^{-alpha}, 0 < alpha < 1
  static TemporalKernel power(double alpha);
  // "const:value=1", "delta", "exp:scale=1", "power:alpha=0.5"
  static TemporalKernel parse(const std::string& id);

  TemporalKind kind() const { return kind_; }
  bool is_delta() const { return kind_ == TemporalKind::delta; }
  double param() const { return param_; }
  std::string id() const;

  // Pointwise value; the delta kernel has no pointwise value (returns +inf at 0).
  double gamma0_at(double u) const;
  // Phi(x) = int_0^{|x|} (|x| - y) gamma0(y) dy, so Phi'' = gamma0.
  double Phi(double x) const;
  // int_a^b int_c^d gamma0(u - v) dv du.
  double rect(double a, double b, double c, double d) const;
  // int_0^t int_0^s gamma0(u - v) dv du.
  double double_integral(double t, double s) const { return rect(0.0, t, 0.0, s); }
  // Gamma_t = int_{-t}^{t} gamma0.
  double Gamma_t(double t) const;
  // Whether int_0^t0 int_0^t0 gamma0(r-v) r^-alpha v^-alpha dr dv < inf for alpha in (0, 1/2).
  bool alpha_admissible(double alpha) const;

 private:
  TemporalKernel(TemporalKind kind, double param) : kind_(kind), param_(param) {}
  TemporalKind kind_;
  double param_;
};

}  // namespace chaosavg
