#include "chaosavg/functionals.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>

#include "chaosavg/error.hpp"
#include "chaosavg/quadrature.hpp"
#include "json.hpp"

namespace chaosavg {

double hermite_eval(int p, double x) {
  require(p >= 0, ErrorCode::invalid_argument, "hermite_eval: order must be nonnegative");
  if (p == 0) return 1.0;
  double h0 = 1.0;
  double h1 = x;
  for (int k = 1; k < p; ++k) {
    const double h2 = x * h1 - k * h0;
    h0 = h1;
    h1 = h2;
  }
  return h1;
}

HermiteSeries::HermiteSeries(std::map<int, double> coeffs) {
  for (const auto& [p, c] : coeffs) {
    require(p >= 0, ErrorCode::invalid_argument, "hermite series: negative order " + std::to_string(p));
    require(std::isfinite(c), ErrorCode::invalid_argument, "hermite series: non-finite coefficient");
    if (c != 0.0) coeffs_[p] = c;
  }
  require(!coeffs_.empty(), ErrorCode::invalid_argument, "hermite series: all coefficients are zero");
  require(coeffs_.begin()->first >= 1, ErrorCode::invalid_argument,
          "hermite series: c_0 must vanish (centered functional, rank >= 1)");
}

double HermiteSeries::operator()(double x) const {
  // Run the recurrence once up to the largest order.
  double s = 0.0;
  double h0 = 1.0;
  double h1 = x;
  auto it = coeffs_.begin();
  for (int k = 0; it != coeffs_.end(); ++k) {
    const double hk = k == 0 ? h0 : h1;
    if (it->first == k) {
      s += it->second * hk;
      ++it;
    }
    if (k >= 1) {
      const double h2 = x * h1 - k * h0;
      h0 = h1;
      h1 = h2;
    }
  }
  return s;
}

double HermiteSeries::second_moment() const {
  double s = 0.0;
  for (const auto& [p, c] : coeffs_) s += c * c * std::tgamma(p + 1.0);
  return s;
}

std::vector<double> apply_series(const HermiteSeries& series, const FieldSample& sample) {
  std::vector<double> out(sample.values.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = series(sample.values[i]);
  return out;
}

// ---------------------------------------------------------------------------

Axis Axis::trapezoid(double a, double b, int n) {
  require(n >= 2 && b > a, ErrorCode::invalid_argument, "axis: trapezoid needs n >= 2 and b > a");
  Axis ax;
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) {
    ax.nodes.push_back(a + i * h);
    ax.weights.push_back((i == 0 || i == n - 1) ? 0.5 * h : h);
  }
  return ax;
}

Axis Axis::gauss_legendre(double a, double b, int n) {
  require(n >= 1 && b > a, ErrorCode::invalid_argument, "axis: gauss-legendre needs n >= 1 and b > a");
  const auto& rule = quad::gauss_legendre(n);
  Axis ax;
  for (int i = 0; i < n; ++i) {
    ax.nodes.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[i]);
    ax.weights.push_back(0.5 * (b - a) * rule.weights[i]);
  }
  return ax;
}

Axis Axis::midpoint(double a, double b, int n) {
  require(n >= 1 && b > a, ErrorCode::invalid_argument, "axis: midpoint needs n >= 1 and b > a");
  Axis ax;
  const double h = (b - a) / n;
  for (int i = 0; i < n; ++i) {
    ax.nodes.push_back(a + (i + 0.5) * h);
    ax.weights.push_back(h);
  }
  return ax;
}

Axis Axis::point(double x, double weight) { return Axis{{x}, {weight}}; }

double Axis::uniform_spacing() const {
  if (nodes.size() < 2) return 0.0;
  const double h = nodes[1] - nodes[0];
  for (std::size_t i = 2; i < nodes.size(); ++i) {
    if (std::abs(nodes[i] - nodes[i - 1] - h) > 1e-9 * h) return 0.0;
  }
  return h;
}

// ---------------------------------------------------------------------------

namespace {

std::size_t ipow(std::size_t n, int p) {
  std::size_t r = 1;
  for (int i = 0; i < p; ++i) r *= n;
  return r;
}

}  // namespace

DiscreteKernel::DiscreteKernel(int order, Axis axis, std::vector<double> values, bool symmetric)
    : order_(order), axis_(std::move(axis)), values_(std::move(values)), symmetric_(symmetric) {
  require(order_ >= 0 && order_ <= 4, ErrorCode::invalid_argument, "discrete kernel: order must be in 0..4");
  require(axis_.nodes.size() == axis_.weights.size() && (order_ == 0 || !axis_.nodes.empty()),
          ErrorCode::invalid_argument, "discrete kernel: malformed axis");
  require(values_.size() == ipow(axis_.size(), order_), ErrorCode::invalid_argument,
          "discrete kernel: value count does not match axis size ^ order");
}

DiscreteKernel DiscreteKernel::from_function(const Axis& axis, const std::vector<double>& e) {
  return tensor_power(axis, e, 1);
}

DiscreteKernel DiscreteKernel::tensor_power(const Axis& axis, const std::vector<double>& e, int p) {
  require(e.size() == axis.size(), ErrorCode::invalid_argument, "tensor_power: factor length differs from axis");
  require(p >= 1 && p <= 4, ErrorCode::invalid_argument, "tensor_power: order must be in 1..4");
  const std::size_t n = axis.size();
  std::vector<double> v(ipow(n, p));
  for (std::size_t f = 0; f < v.size(); ++f) {
    double prod = 1.0;
    std::size_t rest = f;
    for (int k = 0; k < p; ++k) {
      prod *= e[rest % n];
      rest /= n;
    }
    v[f] = prod;
  }
  DiscreteKernel k(p, axis, std::move(v), true);
  k.factor_ = e;
  return k;
}

double DiscreteKernel::at(const std::vector<int>& idx) const {
  require(static_cast<int>(idx.size()) == order_, ErrorCode::invalid_argument, "kernel.at: wrong index count");
  std::size_t f = 0;
  for (int i : idx) f = f * axis_.size() + i;
  return values_[f];
}

DiscreteKernel DiscreteKernel::scaled(double c) const {
  DiscreteKernel k = *this;
  for (double& v : k.values_) v *= c;
  if (!k.factor_.empty()) {
    // c e^{tensor p} is rank-one with factor c^{1/p} e only for c >= 0 or odd p.
    if (c >= 0.0 || order_ % 2 == 1) {
      const double s = std::copysign(std::pow(std::abs(c), 1.0 / order_), c);
      for (double& v : k.factor_) v *= s;
    } else {
      k.factor_.clear();
    }
  }
  return k;
}

DiscreteKernel DiscreteKernel::absolute() const {
  DiscreteKernel k = *this;
  for (double& v : k.values_) v = std::abs(v);
  for (double& v : k.factor_) v = std::abs(v);
  return k;
}

double DiscreteKernel::symmetry_defect(int i, int j) const {
  require(i >= 0 && j >= 0 && i < order_ && j < order_, ErrorCode::invalid_argument,
          "symmetry_defect: argument index out of range");
  const std::size_t n = axis_.size();
  double worst = 0.0;
  std::vector<int> idx(order_);
  for (std::size_t f = 0; f < values_.size(); ++f) {
    std::size_t rest = f;
    for (int k = order_ - 1; k >= 0; --k) {
      idx[k] = static_cast<int>(rest % n);
      rest /= n;
    }
    std::swap(idx[i], idx[j]);
    worst = std::max(worst, std::abs(values_[f] - at(idx)));
  }
  return worst;
}

std::string DiscreteKernel::to_json() const {
  nlohmann::json j;
  j["order"] = order_;
  j["nodes"] = axis_.nodes;
  j["weights"] = axis_.weights;
  j["symmetric"] = symmetric_;
  j["values"] = values_;
  return j.dump();
}

// ---------------------------------------------------------------------------

std::vector<double> weighted_gram(const Axis& axis, const CovarianceModel& gamma, double shift) {
  require(gamma.dim() == 1, ErrorCode::invalid_argument, "discrete kernels live on a one-dimensional axis");
  const std::size_t n = axis.size();
  std::vector<double> m(n * n);
  const bool singular = !gamma.finite_at_zero();
  double h = 0.0;
  if (singular) {
    h = axis.uniform_spacing();
    if (n == 1) h = axis.weights[0];
    require(h > 0.0, ErrorCode::invalid_argument, "singular covariance needs a uniform axis");
  }
  const double beta = gamma.beta();
  auto prim = [beta](double x) { return std::copysign(std::pow(std::abs(x), 1.0 - beta), x) / (1.0 - beta); };
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double u = axis.nodes[i] - axis.nodes[j] + shift;
      double g;
      if (singular && std::abs(u) < 0.5 * h) {
        g = (prim(u + 0.5 * h) - prim(u - 0.5 * h)) / h;
      } else {
        g = gamma.gamma_radial(std::abs(u));
      }
      m[i * n + j] = axis.weights[i] * g * axis.weights[j];
    }
  }
  return m;
}

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Applies M along argument k of a tensor of the given order (row-major).
std::vector<double> mode_product(const std::vector<double>& t, const RowMat& m, std::size_t n, int order, int k) {
  const std::size_t before = ipow(n, k);
  const std::size_t after = ipow(n, order - k - 1);
  std::vector<double> out(t.size());
  for (std::size_t b = 0; b < before; ++b) {
    Eigen::Map<const RowMat> in(t.data() + b * n * after, n, after);
    Eigen::Map<RowMat> res(out.data() + b * n * after, n, after);
    res.noalias() = m.transpose() * in;
  }
  return out;
}

DiscreteKernel contract_with_gram(const DiscreteKernel& f, const DiscreteKernel& g, int r, const RowMat& m) {
  const int p = f.order();
  const int q = g.order();
  const std::size_t n = f.axis().size();
  if (!f.rank_one_factor().empty() && !g.rank_one_factor().empty() && r == p && r == q) {
    Eigen::Map<const Eigen::VectorXd> e1(f.rank_one_factor().data(), n);
    Eigen::Map<const Eigen::VectorXd> e2(g.rank_one_factor().data(), n);
    const double c = e1.dot(m * e2);
    return DiscreteKernel(0, f.axis(), {std::pow(c, r)}, true);
  }
  std::vector<double> t = f.values();
  for (int k = p - r; k < p; ++k) t = mode_product(t, m, n, p, k);
  const std::size_t rows = ipow(n, p - r);
  const std::size_t cols = ipow(n, q - r);
  const std::size_t inner = ipow(n, r);
  Eigen::Map<const RowMat> fm(t.data(), rows, inner);
  Eigen::Map<const RowMat> gm(g.values().data(), cols, inner);
  std::vector<double> out(rows * cols);
  Eigen::Map<RowMat> res(out.data(), rows, cols);
  res.noalias() = fm * gm.transpose();
  return DiscreteKernel(p + q - 2 * r, f.axis(), std::move(out), false);
}

void check_contraction_args(const DiscreteKernel& f, const DiscreteKernel& g, int r) {
  require(r >= 0 && r <= std::min(f.order(), g.order()), ErrorCode::invalid_argument,
          "contract: r = " + std::to_string(r) + " outside [0, min(p, q)]");
  require(f.axis().nodes == g.axis().nodes && f.axis().weights == g.axis().weights, ErrorCode::invalid_argument,
          "contract: kernels live on different axes");
  require(f.order() + g.order() - 2 * r <= 4, ErrorCode::invalid_argument, "contract: result order exceeds 4");
}

}  // namespace

DiscreteKernel contract_shifted(const DiscreteKernel& f, const DiscreteKernel& g, int r,
                                const CovarianceModel& gamma, double z) {
  check_contraction_args(f, g, r);
  const std::size_t n = f.axis().size();
  // Entry (i, j) pairs f-node i with g-node j: gamma(x_j - x_i + z).
  const auto w = weighted_gram(f.axis(), gamma, -z);
  RowMat m = Eigen::Map<const RowMat>(w.data(), n, n);
  return contract_with_gram(f, g, r, m);
}

DiscreteKernel contract(const DiscreteKernel& f, const DiscreteKernel& g, int r, const CovarianceModel& gamma) {
  return contract_shifted(f, g, r, gamma, 0.0);
}

double inner_product(const DiscreteKernel& f, const DiscreteKernel& g, const CovarianceModel& gamma) {
  require(f.order() == g.order(), ErrorCode::invalid_argument, "inner_product: orders differ");
  return contract(f, g, f.order(), gamma).values()[0];
}

double h_norm(const DiscreteKernel& f, const CovarianceModel& gamma) {
  const double s = inner_product(f, f, gamma);
  if (s < -1e-10) {
    fail(ErrorCode::numerical_failure,
         "h_norm: squared norm " + std::to_string(s) + " is negative; the covariance quadrature is not positive definite");
  }
  return std::sqrt(std::max(0.0, s));
}

}  // namespace chaosavg
