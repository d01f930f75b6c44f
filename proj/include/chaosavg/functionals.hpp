#pragma once

// Hermite series and discretized chaos kernels with the gamma-weighted
// contraction calculus. Kernel arguments live on a shared one-dimensional axis.

#include <map>
#include <string>
#include <vector>

#include "chaosavg/field.hpp"
#include "chaosavg/kernels.hpp"

namespace chaosavg {

// Probabilists' Hermite polynomial H_p(x).
double hermite_eval(int p, double x);

class HermiteSeries {
 public:
  HermiteSeries() = default;
  // Zero coefficients are dropped; at least one nonzero coefficient with
  // order >= 1 is required.
  explicit HermiteSeries(std::map<int, double> coeffs);

  const std::map<int, double>& coeffs() const { return coeffs_; }
  int rank() const { return coeffs_.begin()->first; }
  int max_order() const { return coeffs_.rbegin()->first; }
  double operator()(double x) const;
  // E[g(Z)^2] for Z standard normal: sum c_p^2 p!.
  double second_moment() const;

 private:
  std::map<int, double> coeffs_;
};

// g(Y_x) at every site of the sample.
std::vector<double> apply_series(const HermiteSeries& series, const FieldSample& sample);

// Nodes and quadrature weights of one kernel argument.
struct Axis {
  std::vector<double> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  static Axis trapezoid(double a, double b, int n);
  static Axis gauss_legendre(double a, double b, int n);
  // Uniform midpoint nodes a + (i + 1/2) h with weight h.
  static Axis midpoint(double a, double b, int n);
  // Single node with the given weight (a point mass).
  static Axis point(double x, double weight = 1.0);
  // Spacing for uniform axes, zero otherwise.
  double uniform_spacing() const;
};

class DiscreteKernel {
 public:
  DiscreteKernel() = default;
  // values has axis.size()^order entries, row-major over the arguments.
  DiscreteKernel(int order, Axis axis, std::vector<double> values, bool symmetric);

  static DiscreteKernel from_function(const Axis& axis, const std::vector<double>& e);
  // e tensor ... tensor e (order p).
  static DiscreteKernel tensor_power(const Axis& axis, const std::vector<double>& e, int p);

  int order() const { return order_; }
  const Axis& axis() const { return axis_; }
  const std::vector<double>& values() const { return values_; }
  bool symmetric() const { return symmetric_; }
  // Non-empty when the kernel is e^{tensor p}; used by the fast paths.
  const std::vector<double>& rank_one_factor() const { return factor_; }

  double at(const std::vector<int>& idx) const;
  DiscreteKernel scaled(double c) const;
  DiscreteKernel absolute() const;
  // Max deviation under the permutation of two argument blocks.
  double symmetry_defect(int i, int j) const;

  std::string to_json() const;

 private:
  int order_ = 0;
  Axis axis_;
  std::vector<double> values_;
  bool symmetric_ = false;
  std::vector<double> factor_;
};

// Quadrature of gamma between axis nodes: M_ij = w_i gamma(x_i - x_j + shift) w_j.
// Singular kernels use the cell average of gamma over [u - h/2, u + h/2]
// whenever the lag u falls within half a cell of the singularity.
std::vector<double> weighted_gram(const Axis& axis, const CovarianceModel& gamma, double shift = 0.0);

// r-contraction of f and g through gamma (last r arguments of each). For
// r = p = q the result is an order-0 kernel holding <f, g>.
DiscreteKernel contract(const DiscreteKernel& f, const DiscreteKernel& g, int r, const CovarianceModel& gamma);
// Same with the covariance shifted by z: gamma(a - b + z) in every factor.
DiscreteKernel contract_shifted(const DiscreteKernel& f, const DiscreteKernel& g, int r,
                                const CovarianceModel& gamma, double z);

double inner_product(const DiscreteKernel& f, const DiscreteKernel& g, const CovarianceModel& gamma);
double h_norm(const DiscreteKernel& f, const CovarianceModel& gamma);

}  // namespace chaosavg
