#include "chaosavg/field.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <memory>
#include "json.hpp"
#include <sstream>

#include "chaosavg/error.hpp"
#include "chaosavg/quadrature.hpp"
#include "chaosavg/rng.hpp"
#include "internal.hpp"

namespace chaosavg {

void GridSpec::validate() const {
  require(d == 1 || d == 2, ErrorCode::invalid_argument, "grid: dimension must be 1 or 2");
  require(half_extent > 0.0 && spacing > 0.0 && std::isfinite(half_extent) && std::isfinite(spacing),
          ErrorCode::invalid_argument, "grid: half_extent and spacing must be positive");
  const double ratio = half_extent / spacing;
  require(std::abs(ratio - std::round(ratio)) <= 1e-9 * std::max(1.0, ratio), ErrorCode::invalid_argument,
          "grid: half_extent / spacing must be an integer");
}

int GridSpec::points_per_axis() const { return 2 * static_cast<int>(std::lround(half_extent / spacing)) + 1; }

std::size_t GridSpec::sites() const {
  const std::size_t n = points_per_axis();
  return d == 1 ? n : n * n;
}

std::size_t GridSpec::flat(std::span<const int> idx) const {
  const std::size_t n = points_per_axis();
  return d == 1 ? static_cast<std::size_t>(idx[0]) : static_cast<std::size_t>(idx[0]) * n + idx[1];
}

std::vector<int> GridSpec::unflatten(std::size_t f) const {
  const std::size_t n = points_per_axis();
  if (d == 1) return {static_cast<int>(f)};
  return {static_cast<int>(f / n), static_cast<int>(f % n)};
}

double GridSpec::norm_of_site(std::size_t f) const {
  const auto idx = unflatten(f);
  double s = 0.0;
  for (int i : idx) s += coord(i) * coord(i);
  return std::sqrt(s);
}

const char* sampler_name(SamplerMethod m) { return m == SamplerMethod::circulant ? "circulant" : "spectral"; }

// ---------------------------------------------------------------------------

namespace {

std::vector<double> circulant_eigenvalues(const std::vector<double>& row) {
  const int m = static_cast<int>(row.size());
  const int mc = m / 2 + 1;
  double* in = fftw_alloc_real(m);
  fftw_complex* out = fftw_alloc_complex(mc);
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    plan = fftw_plan_dft_r2c_1d(m, in, out, FFTW_ESTIMATE);
  }
  std::copy(row.begin(), row.end(), in);
  fftw_execute(plan);
  std::vector<double> eig(m);
  for (int k = 0; k < mc; ++k) {
    eig[k] = out[k][0];
    if (k > 0) eig[m - k] = out[k][0];
  }
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
  fftw_free(in);
  fftw_free(out);
  return eig;
}

void complex_fft_inplace(std::vector<std::complex<double>>& v) {
  const int m = static_cast<int>(v.size());
  auto* data = reinterpret_cast<fftw_complex*>(v.data());
  fftw_plan plan;
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    // FFTW_ESTIMATE plans never touch the array contents.
    plan = fftw_plan_dft_1d(m, data, data, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
  }
  fftw_execute(plan);
  {
    std::lock_guard lock(detail::fftw_planner_mutex());
    fftw_destroy_plan(plan);
  }
}

}  // namespace

CirculantSampler::CirculantSampler(const CovarianceModel& model, const GridSpec& grid, const CirculantOptions& opt)
    : grid_(grid), model_id_(model.id()) {
  grid.validate();
  require(grid.d == 1 && model.dim() == 1, ErrorCode::invalid_argument,
          "circulant sampler supports d = 1 only");
  require(model.finite_at_zero(), ErrorCode::invalid_argument,
          "circulant sampler needs gamma(0) finite; use the spectral sampler with a cutoff for " + model.id());
  const int n = grid.points_per_axis();
  int m = 1;
  while (m < 2 * (n - 1)) m *= 2;
  m = std::max(m, 2);
  const int m_max = m * std::max(1, opt.max_padding_factor);
  double worst = 0.0;
  for (; m <= m_max; m *= 2) {
    std::vector<double> row(m);
    for (int k = 0; k < m; ++k) row[k] = model.gamma_radial(std::min(k, m - k) * grid.spacing);
    auto eig = circulant_eigenvalues(row);
    const double top = *std::max_element(eig.begin(), eig.end());
    const double low = *std::min_element(eig.begin(), eig.end());
    worst = low;
    if (low >= -opt.negative_tolerance * top) {
      sqrt_eig_.resize(m);
      for (int k = 0; k < m; ++k) sqrt_eig_[k] = std::sqrt(std::max(0.0, eig[k]) / m);
      return;
    }
  }
  std::ostringstream os;
  os.precision(6);
  os << "circulant embedding is not nonnegative definite after padding to " << m_max
     << " points; most negative eigenvalue " << worst;
  fail(ErrorCode::sampler_failure, os.str());
}

FieldSample CirculantSampler::sample(std::uint64_t seed) const {
  const std::size_t m = sqrt_eig_.size();
  std::vector<std::complex<double>> v(m);
  RandomStream rs(seed, StreamTag::field, 0);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = rs.normal();
    const double b = rs.normal();
    v[k] = sqrt_eig_[k] * std::complex<double>(a, b);
  }
  complex_fft_inplace(v);
  FieldSample s;
  s.grid = grid_;
  s.seed = seed;
  s.method = SamplerMethod::circulant;
  s.model_id = model_id_;
  const int n = grid_.points_per_axis();
  s.values.resize(n);
  for (int i = 0; i < n; ++i) s.values[i] = v[i].real();
  return s;
}

FieldSample sample_circulant(const CovarianceModel& model, const GridSpec& grid, std::uint64_t seed,
                             const CirculantOptions& opt) {
  return CirculantSampler(model, grid, opt).sample(seed);
}

// ---------------------------------------------------------------------------

namespace {

// Spectral mass of the square cell [x0, x0+h] x [y0, y0+h].
double cell_mass_2d(const CovarianceModel& model, double x0, double y0, double h) {
  const bool corner_at_origin = (std::abs(x0) < 1e-12 * h || std::abs(x0 + h) < 1e-12 * h) &&
                                (std::abs(y0) < 1e-12 * h || std::abs(y0 + h) < 1e-12 * h);
  if (model.kind() == ModelKind::riesz && corner_at_origin) {
    // Polar integration of c r^{beta-2} over a square with a corner at 0.
    const double beta = model.beta();
    auto ang = [beta](double th) { return std::pow(std::max(std::cos(th), std::sin(th)), -beta); };
    const double a = quad::gauss_kronrod(ang, 0.0, M_PI / 4.0).value + quad::gauss_kronrod(ang, M_PI / 4.0, M_PI / 2.0).value;
    return model.riesz_constant() * std::pow(h, beta) / beta * a;
  }
  const auto& rule = quad::gauss_legendre(8);
  double s = 0.0;
  for (int i = 0; i < 8; ++i) {
    for (int j = 0; j < 8; ++j) {
      const double xi[2] = {x0 + 0.5 * h * (1.0 + rule.nodes[i]), y0 + 0.5 * h * (1.0 + rule.nodes[j])};
      s += rule.weights[i] * rule.weights[j] * model.phi_at(xi);
    }
  }
  return s * 0.25 * h * h;
}

}  // namespace

SpectralSampler::SpectralSampler(const CovarianceModel& model, const GridSpec& grid, double cutoff,
                                 int modes_per_axis)
    : grid_(grid), model_id_(model.id()) {
  grid.validate();
  require(model.dim() == grid.d, ErrorCode::invalid_argument, "spectral sampler: model and grid dimensions differ");
  require(std::isfinite(cutoff) && cutoff > 0.0, ErrorCode::invalid_config,
          model.integrable() ? "spectral sampler needs a finite positive frequency cutoff"
                             : "spectral density of " + model.id() + " is not integrable; a finite cutoff is required");
  require(modes_per_axis >= 2 && modes_per_axis % 2 == 0, ErrorCode::invalid_config,
          "spectral sampler: modes_per_axis must be an even integer >= 2");
  const double h = 2.0 * cutoff / modes_per_axis;
  double retained = 0.0;
  if (grid.d == 1) {
    for (int k = modes_per_axis / 2; k < modes_per_axis; ++k) {
      const double a = -cutoff + k * h;
      const double mass = model.phi_shell_mass(a, a + h);  // both signs
      freq_.push_back(a + 0.5 * h);
      weight_.push_back(std::sqrt(mass));
      retained += mass;
    }
  } else {
    for (int i = modes_per_axis / 2; i < modes_per_axis; ++i) {
      for (int j = 0; j < modes_per_axis; ++j) {
        const double x0 = -cutoff + i * h;
        const double y0 = -cutoff + j * h;
        const double mx = x0 + 0.5 * h;
        const double my = y0 + 0.5 * h;
        if (std::hypot(mx, my) > cutoff) continue;
        const double mass = 2.0 * cell_mass_2d(model, x0, y0, h);
        freq_.push_back(mx);
        freq_.push_back(my);
        weight_.push_back(std::sqrt(mass));
        retained += mass;
      }
    }
  }
  bias_ = model.finite_at_zero() ? model.gamma_zero() - retained : std::numeric_limits<double>::infinity();
}

FieldSample SpectralSampler::sample(std::uint64_t seed) const {
  FieldSample s;
  s.grid = grid_;
  s.seed = seed;
  s.method = SamplerMethod::spectral;
  s.model_id = model_id_;
  s.truncation_bias = bias_;
  const int n = grid_.points_per_axis();
  s.values.assign(grid_.sites(), 0.0);
  RandomStream rs(seed, StreamTag::field, 0);
  const int d = grid_.d;
  const std::size_t modes = weight_.size();
  std::vector<std::complex<double>> u(n), v(n);
  for (std::size_t k = 0; k < modes; ++k) {
    const double a = rs.normal();
    const double b = rs.normal();
    // Re[(A - iB) e^{i xi.x}] = A cos(xi.x) + B sin(xi.x).
    const std::complex<double> coef = weight_[k] * std::complex<double>(a, -b);
    auto fill = [&](std::vector<std::complex<double>>& w, double freq) {
      const std::complex<double> step = std::polar(1.0, freq * grid_.spacing);
      std::complex<double> cur = std::polar(1.0, freq * grid_.coord(0));
      for (int i = 0; i < n; ++i) {
        w[i] = cur;
        cur *= step;
        if ((i & 63) == 63) cur = std::polar(1.0, freq * grid_.coord(i + 1));
      }
    };
    if (d == 1) {
      fill(u, freq_[k]);
      for (int i = 0; i < n; ++i) s.values[i] += (coef * u[i]).real();
    } else {
      fill(u, freq_[2 * k]);
      fill(v, freq_[2 * k + 1]);
      for (int i = 0; i < n; ++i) {
        const std::complex<double> ci = coef * u[i];
        double* row = s.values.data() + static_cast<std::size_t>(i) * n;
        for (int j = 0; j < n; ++j) row[j] += (ci * v[j]).real();
      }
    }
  }
  return s;
}

double SpectralSampler::covariance(std::span<const double> lag) const {
  const int d = grid_.d;
  require(static_cast<int>(lag.size()) == d, ErrorCode::invalid_argument, "covariance: lag dimension mismatch");
  double c = 0.0;
  for (std::size_t k = 0; k < weight_.size(); ++k) {
    double ph = 0.0;
    for (int j = 0; j < d; ++j) ph += freq_[k * d + j] * lag[j];
    c += weight_[k] * weight_[k] * std::cos(ph);
  }
  return c;
}

FieldSample sample_spectral(const CovarianceModel& model, const GridSpec& grid, double cutoff, int modes_per_axis,
                            std::uint64_t seed) {
  return SpectralSampler(model, grid, cutoff, modes_per_axis).sample(seed);
}

// ---------------------------------------------------------------------------

Estimate empirical_covariance(std::span<const FieldSample> samples, std::span<const double> lag) {
  require(samples.size() >= 2, ErrorCode::invalid_argument, "empirical_covariance: need at least 2 samples");
  const GridSpec& g = samples[0].grid;
  for (const auto& s : samples) {
    require(s.grid.d == g.d && s.grid.half_extent == g.half_extent && s.grid.spacing == g.spacing,
            ErrorCode::invalid_argument, "empirical_covariance: samples live on different grids");
  }
  require(static_cast<int>(lag.size()) == g.d, ErrorCode::invalid_argument, "empirical_covariance: lag dimension mismatch");
  const int n = g.points_per_axis();
  const int c = (n - 1) / 2;
  std::vector<int> centre(g.d, c), other(g.d);
  for (int j = 0; j < g.d; ++j) {
    const double steps = lag[j] / g.spacing;
    require(std::abs(steps - std::round(steps)) < 1e-9 * std::max(1.0, std::abs(steps)), ErrorCode::invalid_argument,
            "empirical_covariance: lag is not a multiple of the grid spacing");
    other[j] = c + static_cast<int>(std::lround(steps));
    require(other[j] >= 0 && other[j] < n, ErrorCode::invalid_argument, "empirical_covariance: lag leaves the grid");
  }
  const std::size_t i0 = g.flat(centre);
  const std::size_t i1 = g.flat(other);
  const double m = static_cast<double>(samples.size());
  double mean = 0.0;
  for (const auto& s : samples) mean += s.values[i0] * s.values[i1];
  mean /= m;
  double ss = 0.0;
  for (const auto& s : samples) {
    const double dv = s.values[i0] * s.values[i1] - mean;
    ss += dv * dv;
  }
  // For a sample mean the jackknife variance equals s^2 / n.
  return {mean, std::sqrt(ss / (m - 1.0) / m)};
}

std::string field_to_csv(const FieldSample& s) {
  nlohmann::json h;
  h["d"] = s.grid.d;
  h["half_extent"] = s.grid.half_extent;
  h["spacing"] = s.grid.spacing;
  h["seed"] = s.seed;
  h["method"] = sampler_name(s.method);
  h["model"] = s.model_id;
  if (std::isfinite(s.truncation_bias)) h["truncation_bias"] = s.truncation_bias;
  else h["truncation_bias"] = "inf";
  std::ostringstream os;
  os.precision(17);
  os << "# " << h.dump() << "\nsite,value\n";
  for (std::size_t i = 0; i < s.values.size(); ++i) os << i << ',' << s.values[i] << '\n';
  return os.str();
}

}  // namespace chaosavg
