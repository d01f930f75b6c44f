#include "chaosavg/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

#include "chaosavg/error.hpp"

namespace chaosavg {

void MCEnsemble::add(double group, std::size_t replication, double value, std::uint64_t seed) {
  rows_.push_back({group, replication, value, seed});
}

std::vector<double> MCEnsemble::groups() const {
  std::set<double> keys;
  for (const auto& r : rows_) keys.insert(r.group);
  return {keys.begin(), keys.end()};
}

std::vector<double> MCEnsemble::values(double group) const {
  std::vector<double> out;
  for (const auto& r : rows_) {
    if (r.group == group) out.push_back(r.value);
  }
  return out;
}

void MCEnsemble::check_unique_seeds() const {
  for (double g : groups()) {
    std::set<std::uint64_t> seen;
    for (const auto& r : rows_) {
      if (r.group != g) continue;
      require(seen.insert(r.seed).second, ErrorCode::invalid_input,
              "ensemble: seed " + std::to_string(r.seed) + " repeats within a group");
    }
  }
}

std::string MCEnsemble::to_csv() const {
  std::ostringstream os;
  os.precision(17);
  os << "group,replication,value,seed\n";
  for (const auto& r : rows_) os << r.group << ',' << r.replication << ',' << r.value << ',' << r.seed << '\n';
  return os.str();
}

MCEnsemble MCEnsemble::from_csv(const std::string& text, std::string label) {
  MCEnsemble e(std::move(label));
  std::istringstream is(text);
  std::string line;
  require(static_cast<bool>(std::getline(is, line)) && line.rfind("group,replication,value,seed", 0) == 0,
          ErrorCode::invalid_input, "ensemble csv: missing header");
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ls(line);
    EnsembleRow r;
    char c1 = 0, c2 = 0, c3 = 0;
    ls >> r.group >> c1 >> r.replication >> c2 >> r.value >> c3 >> r.seed;
    require(!ls.fail() && c1 == ',' && c2 == ',' && c3 == ',', ErrorCode::invalid_input,
            "ensemble csv: malformed row at line " + std::to_string(lineno));
    e.rows_.push_back(r);
  }
  return e;
}

// ---------------------------------------------------------------------------

double kolmogorov_survival(double lambda) {
  if (lambda <= 0.0) return 1.0;
  if (lambda < 0.2) return 1.0;
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * lambda * lambda);
    s += (k % 2 == 1 ? 2.0 : -2.0) * term;
    if (term < 1e-17) break;
  }
  return std::clamp(s, 0.0, 1.0);
}

KSResult ks_normal(std::span<const double> values, double mean, double sd) {
  require(sd > 0.0 && std::isfinite(sd), ErrorCode::invalid_argument, "ks_normal: sd must be positive");
  require(values.size() >= 30, ErrorCode::insufficient_data,
          "ks_normal: need at least 30 values, got " + std::to_string(values.size()));
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  const boost::math::normal_distribution<double> dist(mean, sd);
  const double n = static_cast<double>(v.size());
  double dmax = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double f = boost::math::cdf(dist, v[i]);
    dmax = std::max({dmax, (i + 1) / n - f, f - i / n});
  }
  const double sn = std::sqrt(n);
  return {dmax, kolmogorov_survival((sn + 0.12 + 0.11 / sn) * dmax)};
}

// ---------------------------------------------------------------------------

namespace {

struct KStats {
  double mean, k2, k3, k4;
};

// k-statistics from power sums of the centered data.
KStats kstats(double n, double s1, double s2, double s3, double s4) {
  const double m = s1 / n;
  const double c2 = s2 - n * m * m;
  const double c3 = s3 - 3.0 * m * s2 + 2.0 * n * m * m * m;
  const double c4 = s4 - 4.0 * m * s3 + 6.0 * m * m * s2 - 3.0 * n * m * m * m * m;
  const double m2 = c2 / n;
  const double m3 = c3 / n;
  const double m4 = c4 / n;
  KStats k;
  k.mean = m;
  k.k2 = n / (n - 1.0) * m2;
  k.k3 = n * n / ((n - 1.0) * (n - 2.0)) * m3;
  k.k4 = n * n * ((n + 1.0) * m4 - 3.0 * (n - 1.0) * m2 * m2) / ((n - 1.0) * (n - 2.0) * (n - 3.0));
  return k;
}

}  // namespace

MomentSummary moments(std::span<const double> values) {
  const std::size_t n = values.size();
  require(n >= 4, ErrorCode::insufficient_data, "moments: need at least 4 values, got " + std::to_string(n));
  // Shift by the mean first so power sums stay well conditioned.
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double s1 = 0, s2 = 0, s3 = 0, s4 = 0;
  for (double v : values) {
    const double x = v - mean;
    s1 += x;
    s2 += x * x;
    s3 += x * x * x;
    s4 += x * x * x * x;
  }
  const double nn = static_cast<double>(n);
  const KStats full = kstats(nn, s1, s2, s3, s4);
  MomentSummary out;
  out.n = n;
  out.mean = mean + full.mean;
  out.variance = std::max(0.0, full.k2);
  out.mean_se = std::sqrt(out.variance / nn);
  const double scale = std::max(std::abs(mean), 1.0);
  out.higher_defined = full.k2 > 1e-28 * scale * scale;
  if (!out.higher_defined) {
    out.skewness = out.excess_kurtosis = std::numeric_limits<double>::quiet_NaN();
    out.skewness_se = out.excess_kurtosis_se = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.skewness = full.k3 / std::pow(full.k2, 1.5);
  out.excess_kurtosis = full.k4 / (full.k2 * full.k2);
  if (n < 5) {
    out.variance_se = out.skewness_se = out.excess_kurtosis_se = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  // Delete-one jackknife from the power sums, O(n).
  double a2 = 0, a3 = 0, a4 = 0;
  double q2 = 0, q3 = 0, q4 = 0;
  for (double v : values) {
    const double x = v - mean;
    const KStats k = kstats(nn - 1.0, s1 - x, s2 - x * x, s3 - x * x * x, s4 - x * x * x * x);
    const double sk = k.k3 / std::pow(k.k2, 1.5);
    const double ku = k.k4 / (k.k2 * k.k2);
    a2 += k.k2;
    a3 += sk;
    a4 += ku;
    q2 += k.k2 * k.k2;
    q3 += sk * sk;
    q4 += ku * ku;
  }
  auto jk_se = [nn](double sum, double sumsq) {
    const double m = sum / nn;
    return std::sqrt(std::max(0.0, (nn - 1.0) / nn * (sumsq - nn * m * m)));
  };
  out.variance_se = jk_se(a2, q2);
  out.skewness_se = jk_se(a3, q3);
  out.excess_kurtosis_se = jk_se(a4, q4);
  return out;
}

// ---------------------------------------------------------------------------

PowerFit power_fit(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorCode::invalid_argument, "power_fit: x and y differ in length");
  require(x.size() >= 3, ErrorCode::invalid_argument, "power_fit: need at least 3 points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && std::isfinite(x[i]), ErrorCode::invalid_argument, "power_fit: x must be positive");
    require(y[i] > 0.0 && std::isfinite(y[i]), ErrorCode::invalid_argument, "power_fit: y must be positive");
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    syy += ly * ly;
  }
  const double vx = sxx - sx * sx / n;
  const double vy = syy - sy * sy / n;
  const double cxy = sxy - sx * sy / n;
  require(vx > 0.0, ErrorCode::invalid_argument, "power_fit: x values are all equal");
  PowerFit f;
  f.exponent = cxy / vx;
  f.intercept = (sy - f.exponent * sx) / n;
  f.r_squared = vy > 0.0 ? cxy * cxy / (vx * vy) : 1.0;
  return f;
}

}  // namespace chaosavg
