#pragma once

// Thin adaptive-quadrature layer. The rules themselves come from Boost.Math;
// this layer adds the convergence checks and the refinement trace that is
// attached to numerical failures.

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace chaosavg::quad {

using Fn = std::function<double(double)>;

struct Result {
  double value = 0.0;
  double error = 0.0;
};

struct Options {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  unsigned max_depth = 15;
  bool throw_on_failure = true;
};

// Adaptive Gauss-Kronrod (G10/K21). Infinite bounds are mapped internally.
Result gauss_kronrod(const Fn& f, double a, double b, const Options& opt = {});

// Double-exponential rule for integrable endpoint singularities on [a, b].
Result tanh_sinh(const Fn& f, double a, double b, const Options& opt = {});

// Double-exponential rule on [a, +inf).
Result exp_sinh(const Fn& f, double a, const Options& opt = {});

// Sums gauss_kronrod over the pieces delimited by the sorted breakpoints that
// fall inside (a, b). Use tanh_sinh pieces when `singular_breaks` is set.
Result piecewise(const Fn& f, double a, double b, std::span<const double> breaks,
                 bool singular_breaks, const Options& opt = {});

// Fixed Gauss-Legendre nodes/weights on [-1, 1] (Golub-Welsch, cached per n).
struct Rule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const Rule& gauss_legendre(int n);

// Gauss-Jacobi rule for the symmetric weight (1-u^2)^a on [-1, 1], a > -1.
Rule gauss_jacobi_symmetric(int n, double a);

// Convenience: fixed n-point Gauss-Legendre on [a, b].
double fixed_gl(const Fn& f, double a, double b, int n);

}  // namespace chaosavg::quad
