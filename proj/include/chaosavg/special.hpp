#pragma once

// Special functions shared by the variance formulas: ball volumes, Bessel
// functions of the first kind, the Fourier transform of a ball, and the
// approximation of the identity ell_R(x) = J_{d/2}(R|x|)^2 / (omega_d |x|^d).

#include <functional>
#include <span>
#include <vector>

namespace chaosavg {

// omega_d = pi^{d/2} / Gamma(1 + d/2).
double ball_volume(int d);
// Surface area of the unit sphere in R^d, d * omega_d.
double sphere_area(int d);

// Volume of B_a(0) intersected with B_a(x) for |x| = r.
double ball_overlap_volume(int d, double a, double r);

// J_p(x) for p > 0. Quadrature of the integral representation for |x| <= 30,
// Hankel asymptotic series beyond.
double bessel_j(double p, double x);
double bessel_j_quadrature(double p, double x);
double bessel_j_asymptotic(double p, double x);
inline constexpr double kBesselCrossover = 30.0;

// Integral of exp(-i xi.u) over B_R, as a function of r = |xi|.
double ball_fourier_radial(int d, double R, double r);
double ball_fourier(int d, double R, std::span<const double> xi);

// ell_R as a function of r = |x| (value at 0 is the continuous extension).
double ell_R_radial(int d, double R, double r);
double ell_R(int d, double R, std::span<const double> x);

struct EllIntegralOptions {
  double rho_max = 2000.0;  // end of the oscillatory panels in rho = R|x|
  int nodes_per_panel = 24;
};

// Integral over R^d of ell_R(x) f(|x|) dx. Panels of width pi in rho = R|x|
// (with a break at rho = 1) up to rho_max; beyond that J^2 is replaced by its
// oscillation average 1/(pi rho). `f` must be bounded.
double integrate_against_ell(int d, double R, const std::function<double(double)>& f,
                             const EllIntegralOptions& opt = {});

// Uniform frequency grid: n points per axis spaced h apart, centred on 0
// (n odd). Values are stored row-major for d = 2.
struct FrequencyGrid {
  int d = 1;
  int n = 0;
  double h = 0.0;
  double coord(int i) const { return (i - (n - 1) / 2) * h; }
  std::size_t size() const;
};

// p-fold convolution phi^{*p} on the grid by zero-padded FFT; output sampled on
// the same grid.
std::vector<double> convolve_power(std::span<const double> phi, int p, const FrequencyGrid& grid);

// Discrete L^q norm (h^d sum |phi|^q)^{1/q}.
double discrete_lq_norm(std::span<const double> phi, double q, const FrequencyGrid& grid);

}  // namespace chaosavg
