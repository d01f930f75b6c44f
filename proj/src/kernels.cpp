#include "chaosavg/kernels.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>
#include <sstream>

#include "catalog_id.hpp"
#include "chaosavg/error.hpp"
#include "chaosavg/quadrature.hpp"
#include "chaosavg/special.hpp"

namespace chaosavg {

namespace detail {

CatalogId parse_catalog_id(const std::string& id) {
  CatalogId out;
  const auto colon = id.find(':');
  out.name = id.substr(0, colon);
  require(!out.name.empty(), ErrorCode::invalid_config, "empty catalog id");
  if (colon == std::string::npos) return out;
  std::stringstream ss(id.substr(colon + 1));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    require(eq != std::string::npos && eq > 0, ErrorCode::invalid_config,
            "malformed parameter '" + item + "' in '" + id + "'");
    const std::string key = item.substr(0, eq);
    const std::string val = item.substr(eq + 1);
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(val, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    require(used == val.size() && !val.empty() && std::isfinite(v), ErrorCode::invalid_config,
            "parameter '" + key + "' in '" + id + "' is not a finite number");
    require(out.params.emplace(key, v).second, ErrorCode::invalid_config,
            "duplicate parameter '" + key + "' in '" + id + "'");
  }
  return out;
}

double take_param(CatalogId& id, const std::string& key, double fallback) {
  auto it = id.params.find(key);
  if (it == id.params.end()) return fallback;
  const double v = it->second;
  id.params.erase(it);
  return v;
}

void reject_leftover_params(const CatalogId& id, const std::string& full) {
  if (!id.params.empty()) {
    fail(ErrorCode::invalid_config, "unknown parameter '" + id.params.begin()->first + "' in '" + full + "'");
  }
}

}  // namespace detail

double riesz_constant_numeric(int d, double beta) {
  quad::Options o;
  o.rel_tol = 1e-13;
  auto moment = [&](double a) {
    // int_0^inf r^{a-1} exp(-r^2/2) dr, split at 1 for the endpoint singularity.
    auto f = [a](double r) { return std::pow(r, a - 1.0) * std::exp(-0.5 * r * r); };
    return quad::tanh_sinh(f, 0.0, 1.0, o).value + quad::exp_sinh(f, 1.0, o).value;
  };
  return moment(d - beta) / (std::pow(2.0 * M_PI, 0.5 * d) * moment(beta));
}

CovarianceModel::CovarianceModel(int d, ModelKind kind, double scale, double beta)
    : d_(d), kind_(kind), scale_(scale), beta_(beta) {
  require(d >= 1 && d <= 3, ErrorCode::invalid_argument, "covariance model: dimension must be 1, 2 or 3");
  if (kind == ModelKind::riesz) {
    require(beta > 0.0 && beta < std::min(2.0, static_cast<double>(d)), ErrorCode::invalid_argument,
            "riesz model requires 0 < beta < min(2, d); got beta=" + std::to_string(beta) +
                " with d=" + std::to_string(d));
    riesz_c_ = riesz_constant_numeric(d, beta);
  } else {
    require(scale > 0.0 && std::isfinite(scale), ErrorCode::invalid_argument,
            "covariance model: scale must be positive and finite");
  }
}

CovarianceModel CovarianceModel::gaussian(int d, double scale) { return {d, ModelKind::gaussian, scale, 0.0}; }
CovarianceModel CovarianceModel::exponential(int d, double scale) { return {d, ModelKind::exponential, scale, 0.0}; }
CovarianceModel CovarianceModel::bump(int d, double radius) { return {d, ModelKind::bump, radius, 0.0}; }
CovarianceModel CovarianceModel::riesz(int d, double beta) { return {d, ModelKind::riesz, 1.0, beta}; }

CovarianceModel CovarianceModel::parse(const std::string& id, int d) {
  auto c = detail::parse_catalog_id(id);
  try {
    if (c.name == "gaussian") {
      const double s = detail::take_param(c, "scale", 1.0);
      detail::reject_leftover_params(c, id);
      return gaussian(d, s);
    }
    if (c.name == "exponential") {
      const double s = detail::take_param(c, "scale", 1.0);
      detail::reject_leftover_params(c, id);
      return exponential(d, s);
    }
    if (c.name == "bump") {
      const double s = detail::take_param(c, "radius", 1.0);
      detail::reject_leftover_params(c, id);
      return bump(d, s);
    }
    if (c.name == "riesz") {
      const double b = detail::take_param(c, "beta", std::numeric_limits<double>::quiet_NaN());
      require(!std::isnan(b), ErrorCode::invalid_config, "riesz model needs beta: '" + id + "'");
      detail::reject_leftover_params(c, id);
      return riesz(d, b);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) fail(ErrorCode::invalid_config, e.what());
    throw;
  }
  fail(ErrorCode::invalid_config, "unknown covariance model '" + c.name + "'");
}

std::string CovarianceModel::id() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case ModelKind::gaussian: os << "gaussian:scale=" << scale_; break;
    case ModelKind::exponential: os << "exponential:scale=" << scale_; break;
    case ModelKind::bump: os << "bump:radius=" << scale_; break;
    case ModelKind::riesz: os << "riesz:beta=" << beta_; break;
  }
  return os.str();
}

double CovarianceModel::gamma_radial(double r) const {
  r = std::abs(r);
  switch (kind_) {
    case ModelKind::gaussian: return std::exp(-(r / scale_) * (r / scale_));
    case ModelKind::exponential: return std::exp(-r / scale_);
    case ModelKind::bump: return ball_overlap_volume(d_, scale_, r) / (ball_volume(d_) * std::pow(scale_, d_));
    case ModelKind::riesz: return r == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(r, -beta_);
  }
  return 0.0;
}

double CovarianceModel::gamma_at(std::span<const double> x) const {
  require(static_cast<int>(x.size()) == d_, ErrorCode::invalid_argument, "gamma_at: point dimension mismatch");
  double s = 0.0;
  for (double v : x) s += v * v;
  return gamma_radial(std::sqrt(s));
}

double CovarianceModel::phi_radial(double k) const {
  k = std::abs(k);
  switch (kind_) {
    case ModelKind::gaussian: {
      const double a = scale_ / (2.0 * std::sqrt(M_PI));
      return std::pow(a, d_) * std::exp(-0.25 * scale_ * scale_ * k * k);
    }
    case ModelKind::exponential: {
      const double h = 0.5 * (d_ + 1);
      return std::tgamma(h) / std::pow(M_PI, h) * std::pow(scale_, d_) / std::pow(1.0 + scale_ * scale_ * k * k, h);
    }
    case ModelKind::bump: return ell_R_radial(d_, scale_, k);
    case ModelKind::riesz:
      return k == 0.0 ? std::numeric_limits<double>::infinity() : riesz_c_ * std::pow(k, beta_ - d_);
  }
  return 0.0;
}

double CovarianceModel::phi_at(std::span<const double> xi) const {
  require(static_cast<int>(xi.size()) == d_, ErrorCode::invalid_argument, "phi_at: point dimension mismatch");
  double s = 0.0;
  for (double v : xi) s += v * v;
  return phi_radial(std::sqrt(s));
}

double CovarianceModel::gamma_zero() const {
  return kind_ == ModelKind::riesz ? std::numeric_limits<double>::infinity() : 1.0;
}

double CovarianceModel::gamma_integral() const {
  if (kind_ == ModelKind::riesz) return std::numeric_limits<double>::infinity();
  return std::pow(2.0 * M_PI, d_) * phi_radial(0.0);
}

double CovarianceModel::phi_sup() const { return phi_radial(0.0); }

double CovarianceModel::phi_shell_mass(double k0, double k1) const {
  require(0.0 <= k0 && k0 <= k1, ErrorCode::invalid_argument, "phi_shell_mass: need 0 <= k0 <= k1");
  if (k0 == k1) return 0.0;
  const double area = sphere_area(d_);
  switch (kind_) {
    case ModelKind::gaussian: {
      // |xi|^2 scale^2 / 2 is chi-square with d degrees of freedom.
      auto cdf = [&](double k) {
        return std::isinf(k) ? 1.0 : boost::math::gamma_p(0.5 * d_, 0.25 * scale_ * scale_ * k * k);
      };
      return cdf(k1) - cdf(k0);
    }
    case ModelKind::exponential:
      if (d_ == 1) {
        return (2.0 / M_PI) * (std::atan(scale_ * k1) - std::atan(scale_ * k0));
      }
      [[fallthrough]];
    case ModelKind::bump: {
      auto f = [&](double k) { return area * std::pow(k, d_ - 1) * phi_radial(k); };
      quad::Options o;
      o.rel_tol = 1e-12;
      o.throw_on_failure = false;
      if (std::isinf(k1)) {
        // Break the oscillating bump density into half-periods before the tail.
        double total = 0.0;
        double a = k0;
        const double step = kind_ == ModelKind::bump ? M_PI / scale_ : 1.0 / scale_;
        const double stop = k0 + 400.0 * step;
        while (a < stop) {
          total += quad::gauss_kronrod(f, a, a + step, o).value;
          a += step;
        }
        return total + quad::gauss_kronrod(f, a, std::numeric_limits<double>::infinity(), o).value;
      }
      return quad::gauss_kronrod(f, k0, k1, o).value;
    }
    case ModelKind::riesz:
      if (std::isinf(k1)) return std::numeric_limits<double>::infinity();
      return riesz_c_ * area * (std::pow(k1, beta_) - std::pow(k0, beta_)) / beta_;
  }
  return 0.0;
}

double CovarianceModel::correlation_length() const {
  switch (kind_) {
    case ModelKind::gaussian:
    case ModelKind::exponential: return scale_;
    case ModelKind::bump: return 2.0 * scale_;
    case ModelKind::riesz: return 1.0;
  }
  return 1.0;
}

// ---------------------------------------------------------------------------

TemporalKernel TemporalKernel::constant(double value) {
  require(value >= 0.0 && std::isfinite(value), ErrorCode::invalid_argument,
          "constant temporal kernel needs a finite nonnegative value");
  return {TemporalKind::constant, value};
}

TemporalKernel TemporalKernel::delta() { return {TemporalKind::delta, 0.0}; }

TemporalKernel TemporalKernel::exponential(double scale) {
  require(scale > 0.0 && std::isfinite(scale), ErrorCode::invalid_argument,
          "exponential temporal kernel needs a positive scale");
  return {TemporalKind::exponential, scale};
}

TemporalKernel TemporalKernel::power(double alpha) {
  require(alpha > 0.0 && alpha < 1.0, ErrorCode::invalid_argument,
          "power temporal kernel |u|^-alpha needs 0 < alpha < 1 for local integrability");
  return {TemporalKind::power, alpha};
}

TemporalKernel TemporalKernel::parse(const std::string& id) {
  auto c = detail::parse_catalog_id(id);
  try {
    if (c.name == "const" || c.name == "constant") {
      const double v = detail::take_param(c, "value", 1.0);
      detail::reject_leftover_params(c, id);
      return constant(v);
    }
    if (c.name == "delta") {
      detail::reject_leftover_params(c, id);
      return delta();
    }
    if (c.name == "exp" || c.name == "exponential") {
      const double s = detail::take_param(c, "scale", 1.0);
      detail::reject_leftover_params(c, id);
      return exponential(s);
    }
    if (c.name == "power") {
      const double a = detail::take_param(c, "alpha", std::numeric_limits<double>::quiet_NaN());
      require(!std::isnan(a), ErrorCode::invalid_config, "power temporal kernel needs alpha: '" + id + "'");
      detail::reject_leftover_params(c, id);
      return power(a);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) fail(ErrorCode::invalid_config, e.what());
    throw;
  }
  fail(ErrorCode::invalid_config, "unknown temporal kernel '" + c.name + "'");
}

std::string TemporalKernel::id() const {
  std::ostringstream os;
  os.precision(17);
  switch (kind_) {
    case TemporalKind::constant: os << "const:value=" << param_; break;
    case TemporalKind::delta: os << "delta"; break;
    case TemporalKind::exponential: os << "exp:scale=" << param_; break;
    case TemporalKind::power: os << "power:alpha=" << param_; break;
  }
  return os.str();
}

double TemporalKernel::gamma0_at(double u) const {
  u = std::abs(u);
  switch (kind_) {
    case TemporalKind::constant: return param_;
    case TemporalKind::delta: return u == 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    case TemporalKind::exponential: return std::exp(-u / param_);
    case TemporalKind::power: return u == 0.0 ? std::numeric_limits<double>::infinity() : std::pow(u, -param_);
  }
  return 0.0;
}

double TemporalKernel::Phi(double x) const {
  x = std::abs(x);
  switch (kind_) {
    case TemporalKind::constant: return 0.5 * param_ * x * x;
    case TemporalKind::delta: return 0.5 * x;
    case TemporalKind::exponential: {
      const double y = x / param_;
      // lambda^2 (y - 1 + e^{-y}) without cancellation for small y.
      double core;
      if (y < 1e-3) {
        core = y * y * (0.5 - y * (1.0 / 6.0 - y * (1.0 / 24.0 - y / 120.0)));
      } else {
        core = y + std::expm1(-y);
      }
      return param_ * param_ * core;
    }
    case TemporalKind::power: {
      const double a = param_;
      return std::pow(x, 2.0 - a) / ((1.0 - a) * (2.0 - a));
    }
  }
  return 0.0;
}

double TemporalKernel::rect(double a, double b, double c, double d) const {
  return Phi(b - c) - Phi(a - c) - Phi(b - d) + Phi(a - d);
}

double TemporalKernel::Gamma_t(double t) const {
  require(t >= 0.0, ErrorCode::invalid_argument, "Gamma_t: t must be nonnegative");
  switch (kind_) {
    case TemporalKind::constant: return 2.0 * param_ * t;
    case TemporalKind::delta: return 1.0;
    case TemporalKind::exponential: return -2.0 * param_ * std::expm1(-t / param_);
    case TemporalKind::power: return 2.0 * std::pow(t, 1.0 - param_) / (1.0 - param_);
  }
  return 0.0;
}

bool TemporalKernel::alpha_admissible(double alpha) const {
  if (!(alpha > 0.0 && alpha < 0.5)) return false;
  // Bounded kernels and the delta kernel only need 2 alpha < 1; the power
  // kernel needs the homogeneity degree 2 - a - 2 alpha to stay positive.
  if (kind_ == TemporalKind::power) return param_ + 2.0 * alpha < 2.0;
  return true;
}

}  // namespace chaosavg
