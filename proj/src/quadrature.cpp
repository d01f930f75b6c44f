#include "chaosavg/quadrature.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <cmath>
#include <map>
#include <mutex>
#include <sstream>

#include "chaosavg/error.hpp"

namespace chaosavg::quad {
namespace {

bool converged(const Result& r, const Options& opt) {
  return std::isfinite(r.value) && r.error <= std::max(opt.rel_tol * std::abs(r.value), opt.abs_tol);
}

[[noreturn]] void report_failure(const char* rule, double a, double b, const std::vector<Result>& trace) {
  std::ostringstream os;
  os << rule << " quadrature on [" << a << ", " << b << "] did not converge; refinement trace:";
  for (std::size_t i = 0; i < trace.size(); ++i) {
    os << " [" << i << "] " << trace[i].value << " (err " << trace[i].error << ")";
  }
  fail(ErrorCode::numerical_failure, os.str());
}

Result gk_once(const Fn& f, double a, double b, double tol, unsigned depth) {
  Result r;
  double l1 = 0.0;
  r.value = boost::math::quadrature::gauss_kronrod<double, 21>::integrate(f, a, b, depth, tol, &r.error, &l1);
  return r;
}

}  // namespace

Result gauss_kronrod(const Fn& f, double a, double b, const Options& opt) {
  if (a == b) return {};
  Result r;
  try {
    r = gk_once(f, a, b, opt.rel_tol, opt.max_depth);
  } catch (const std::exception& e) {
    fail(ErrorCode::numerical_failure, std::string("gauss-kronrod: ") + e.what());
  }
  if (converged(r, opt) || !opt.throw_on_failure) return r;
  std::vector<Result> trace;
  for (unsigned depth : {3u, 6u, 9u, 12u}) {
    if (depth < opt.max_depth) trace.push_back(gk_once(f, a, b, opt.rel_tol, depth));
  }
  trace.push_back(r);
  // The summed local error estimate can stall at roundoff level; accept when
  // the last refinements agree to the requested tolerance.
  if (trace.size() >= 3 && std::isfinite(r.value)) {
    const double tol = std::max(opt.rel_tol * std::abs(r.value), opt.abs_tol);
    const auto n = trace.size();
    if (std::abs(trace[n - 1].value - trace[n - 2].value) <= tol &&
        std::abs(trace[n - 2].value - trace[n - 3].value) <= tol) {
      return r;
    }
  }
  report_failure("gauss-kronrod", a, b, trace);
}

namespace {

Result ts_once(const Fn& f, double a, double b, double tol) {
  thread_local boost::math::quadrature::tanh_sinh<double> integrator(15);
  Result r;
  try {
    double l1 = 0.0;
    std::size_t levels = 0;
    r.value = integrator.integrate(f, a, b, tol, &r.error, &l1, &levels);
  } catch (const std::exception& e) {
    fail(ErrorCode::numerical_failure, std::string("tanh-sinh: ") + e.what());
  }
  return r;
}

// Bisects [a, b] until each half meets its share of the tolerance.
Result ts_split(const Fn& f, double a, double b, const Options& opt, int depth, std::vector<Result>& trace) {
  Result r = ts_once(f, a, b, opt.rel_tol);
  if (converged(r, opt) || depth == 0) {
    if (!converged(r, opt)) trace.push_back(r);
    return r;
  }
  const double m = 0.5 * (a + b);
  Options half = opt;
  half.abs_tol = 0.5 * opt.abs_tol;
  const Result left = ts_split(f, a, m, half, depth - 1, trace);
  const Result right = ts_split(f, m, b, half, depth - 1, trace);
  return {left.value + right.value, left.error + right.error};
}

}  // namespace

Result tanh_sinh(const Fn& f, double a, double b, const Options& opt) {
  if (a == b) return {};
  std::vector<Result> trace;
  Result r = ts_split(f, a, b, opt, 6, trace);
  const double tol = std::max(opt.rel_tol * std::abs(r.value), opt.abs_tol);
  if ((std::isfinite(r.value) && r.error <= tol) || !opt.throw_on_failure) return r;
  trace.push_back(r);
  report_failure("tanh-sinh", a, b, trace);
}

Result exp_sinh(const Fn& f, double a, const Options& opt) {
  thread_local boost::math::quadrature::exp_sinh<double> integrator(15);
  Result r;
  try {
    double l1 = 0.0;
    std::size_t levels = 0;
    r.value = integrator.integrate(f, a, std::numeric_limits<double>::infinity(), opt.rel_tol, &r.error, &l1,
                                   &levels);
  } catch (const std::exception& e) {
    fail(ErrorCode::numerical_failure, std::string("exp-sinh: ") + e.what());
  }
  if (converged(r, opt) || !opt.throw_on_failure) return r;
  report_failure("exp-sinh", a, std::numeric_limits<double>::infinity(), {r});
}

Result piecewise(const Fn& f, double a, double b, std::span<const double> breaks, bool singular_breaks,
                 const Options& opt) {
  std::vector<double> pts{a};
  std::vector<double> inner(breaks.begin(), breaks.end());
  std::sort(inner.begin(), inner.end());
  for (double x : inner) {
    if (x > pts.back() && x < b) pts.push_back(x);
  }
  pts.push_back(b);
  Result total;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const double lo = pts[i];
    const double hi = pts[i + 1];
    Result piece;
    if (singular_breaks && std::isfinite(lo) && std::isfinite(hi)) {
      piece = tanh_sinh(f, lo, hi, opt);
    } else if (singular_breaks && std::isfinite(lo) && !std::isfinite(hi)) {
      piece = exp_sinh(f, lo, opt);
    } else if (singular_breaks && !std::isfinite(lo) && std::isfinite(hi)) {
      piece = exp_sinh([&f, hi](double u) { return f(hi - u); }, 0.0, opt);
    } else {
      piece = gauss_kronrod(f, lo, hi, opt);
    }
    total.value += piece.value;
    total.error += piece.error;
  }
  return total;
}

Rule gauss_jacobi_symmetric(int n, double a) {
  require(n >= 1, ErrorCode::invalid_argument, "gauss_jacobi_symmetric: n must be positive");
  require(a > -1.0, ErrorCode::invalid_argument, "gauss_jacobi_symmetric: exponent must exceed -1");
  // Jacobi matrix of the orthonormal polynomials for (1-u^2)^a: zero diagonal,
  // off-diagonal b_k = sqrt(k (k + 2a) / ((2k + 2a + 1)(2k + 2a - 1))).
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double kk = k;
    const double b = std::sqrt(kk * (kk + 2.0 * a) / ((2.0 * kk + 2.0 * a + 1.0) * (2.0 * kk + 2.0 * a - 1.0)));
    jac(k - 1, k) = b;
    jac(k, k - 1) = b;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
  const double mu0 = std::sqrt(M_PI) * std::tgamma(a + 1.0) / std::tgamma(a + 1.5);
  Rule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = es.eigenvalues()(i);
    const double v0 = es.eigenvectors()(0, i);
    rule.weights[i] = mu0 * v0 * v0;
  }
  return rule;
}

const Rule& gauss_legendre(int n) {
  static std::mutex mu;
  static std::map<int, Rule> cache;
  std::lock_guard lock(mu);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, gauss_jacobi_symmetric(n, 0.0)).first;
  return it->second;
}

double fixed_gl(const Fn& f, double a, double b, int n) {
  const Rule& rule = gauss_legendre(n);
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return sum * half;
}

}  // namespace chaosavg::quad
