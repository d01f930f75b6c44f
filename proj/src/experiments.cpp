#include "chaosavg/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "chaosavg/breuer_major.hpp"
#include "chaosavg/error.hpp"
#include "chaosavg/quadrature.hpp"
#include "chaosavg/she.hpp"
#include "chaosavg/special.hpp"
#include "json.hpp"

namespace chaosavg {
namespace {

using json = nlohmann::ordered_json;
namespace fs = std::filesystem;

[[noreturn]] void cfg_fail(const std::string& what) { fail(ErrorCode::invalid_config, what); }

// Re-labels argument errors raised while building the experiment as config errors.
template <class F>
auto validated(F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::invalid_argument) cfg_fail(e.what());
    throw;
  }
}

// One JSON object of the config. Every accessor records the key; finish()
// rejects whatever was not read.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) cfg_fail(path_ + " must be a JSON object");
  }

  bool has(const std::string& k) const { return j_.contains(k); }

  double num(const std::string& k, std::optional<double> def) {
    const json* v = lookup(k, def.has_value());
    if (!v) return *def;
    if (!v->is_number()) cfg_fail(where(k) + " must be a number");
    const double x = v->get<double>();
    if (!std::isfinite(x)) cfg_fail(where(k) + " must be finite");
    return x;
  }

  double positive(const std::string& k, std::optional<double> def) {
    const double x = num(k, def);
    if (!(x > 0.0)) cfg_fail(where(k) + " must be positive");
    return x;
  }

  std::int64_t integer(const std::string& k, std::optional<std::int64_t> def, std::int64_t min_value) {
    const json* v = lookup(k, def.has_value());
    std::int64_t x = def.value_or(0);
    if (v) {
      if (!v->is_number_integer()) cfg_fail(where(k) + " must be an integer");
      x = v->get<std::int64_t>();
    }
    if (x < min_value) cfg_fail(where(k) + " must be >= " + std::to_string(min_value));
    return x;
  }

  std::uint64_t seed(const std::string& k, std::uint64_t def) {
    const json* v = lookup(k, true);
    if (!v) return def;
    if (!v->is_number_unsigned()) cfg_fail(where(k) + " must be a non-negative integer");
    return v->get<std::uint64_t>();
  }

  std::string str(const std::string& k, std::optional<std::string> def) {
    const json* v = lookup(k, def.has_value());
    if (!v) return *def;
    if (!v->is_string()) cfg_fail(where(k) + " must be a string");
    return v->get<std::string>();
  }

  bool boolean(const std::string& k, bool def) {
    const json* v = lookup(k, true);
    if (!v) return def;
    if (!v->is_boolean()) cfg_fail(where(k) + " must be true or false");
    return v->get<bool>();
  }

  std::vector<double> nums(const std::string& k, std::optional<std::vector<double>> def) {
    const json* v = lookup(k, def.has_value());
    if (!v) return *def;
    if (!v->is_array() || v->empty()) cfg_fail(where(k) + " must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : *v) {
      if (!e.is_number()) cfg_fail(where(k) + " must contain numbers only");
      out.push_back(e.get<double>());
    }
    return out;
  }

  std::vector<std::string> strs(const std::string& k, std::optional<std::vector<std::string>> def) {
    const json* v = lookup(k, def.has_value());
    if (!v) return *def;
    if (!v->is_array()) cfg_fail(where(k) + " must be an array of strings");
    std::vector<std::string> out;
    for (const auto& e : *v) {
      if (!e.is_string()) cfg_fail(where(k) + " must contain strings only");
      out.push_back(e.get<std::string>());
    }
    return out;
  }

  const json& raw(const std::string& k) {
    used_.insert(k);
    return j_.at(k);
  }

  Section sub(const std::string& k) {
    static const json empty = json::object();
    used_.insert(k);
    return Section(j_.contains(k) ? j_.at(k) : empty, where(k));
  }

  void finish() const {
    for (const auto& item : j_.items()) {
      if (!used_.count(item.key())) cfg_fail("unknown field '" + where(item.key()) + "'");
    }
  }

  std::string where(const std::string& k) const { return path_.empty() ? k : path_ + "." + k; }

 private:
  const json* lookup(const std::string& k, bool optional) {
    used_.insert(k);
    if (!j_.contains(k)) {
      if (!optional) cfg_fail("missing required field '" + where(k) + "'");
      return nullptr;
    }
    return &j_.at(k);
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

std::string fmt(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

json num_json(double x) { return std::isfinite(x) ? json(x) : json(fmt(x)); }

struct Check {
  std::string name;
  double measured = 0.0;
  json target;  // tolerance, bound or [lo, hi]
  bool pass = false;
  std::string detail;
};

json checks_json(const std::vector<Check>& checks) {
  json arr = json::array();
  for (const auto& c : checks) {
    json o;
    o["name"] = c.name;
    o["measured"] = num_json(c.measured);
    o["target"] = c.target;
    o["pass"] = c.pass;
    if (!c.detail.empty()) o["detail"] = c.detail;
    arr.push_back(o);
  }
  return arr;
}

bool all_pass(const std::vector<Check>& checks) {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.pass; });
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream os(p, std::ios::binary);
  if (!os) fail(ErrorCode::io_error, "cannot write " + p.string());
  os << text;
  if (!os) fail(ErrorCode::io_error, "write failed for " + p.string());
}

RunOutcome finish_run(const std::string& command, json verdict, std::string csv, const RunOptions& opt) {
  RunOutcome out;
  out.pass = verdict.value("pass", false);
  out.verdict_json = verdict.dump(2) + "\n";
  out.csv = std::move(csv);
  if (opt.write_files) {
    std::error_code ec;
    fs::create_directories(opt.out_dir, ec);
    if (ec) fail(ErrorCode::io_error, "cannot create output directory " + opt.out_dir + ": " + ec.message());
    const fs::path csv_path = fs::path(opt.out_dir) / (command + ".csv");
    const fs::path verdict_path = fs::path(opt.out_dir) / (command + "_verdict.json");
    write_text(csv_path, out.csv);
    write_text(verdict_path, out.verdict_json);
    out.files = {csv_path.string(), verdict_path.string()};
  }
  return out;
}

void check_command_field(Section& s, const std::string& command) {
  if (!s.has("command")) return;
  const std::string c = s.str("command", std::nullopt);
  if (c != command) cfg_fail("config is for command '" + c + "', not '" + command + "'");
}

std::uint64_t master_seed(Section& s, const RunOptions& opt) {
  const std::uint64_t from_config = s.seed("master_seed", 1);
  return opt.seed.value_or(from_config);
}

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> x(n);
  for (int i = 0; i < n; ++i) x[i] = lo * std::pow(hi / lo, static_cast<double>(i) / (n - 1));
  return x;
}

// ---------------------------------------------------------------------------
// special-check

RunOutcome cmd_special_check(const json& cfg, const RunOptions& opt) {
  Section s(cfg, "");
  check_command_field(s, "special-check");
  const std::uint64_t seed = master_seed(s, opt);
  const int n_points = static_cast<int>(s.integer("n_points", 1000, 10));
  const std::vector<double> radii = s.nums("ball_radii", std::vector<double>{1.0, 7.5});
  for (double R : radii) {
    if (!(R > 0.0)) cfg_fail("ball_radii must be positive");
  }
  Section tol = s.sub("tolerances");
  const double tol_ball = tol.positive("ball_fourier_rel", 1e-10);
  const double tol_mass = tol.positive("ell_mass_abs", 1e-3);
  const double tol_half = tol.positive("bessel_half_abs", 1e-9);
  const double tol_cross = tol.positive("bessel_crossover_abs", 1e-9);
  const double env_bound = tol.positive("bessel_envelope_bound", 1.0);
  const double tol_phi = tol.positive("gaussian_phi_mass_abs", 1e-8);
  tol.finish();
  s.finish();

  std::vector<Check> checks;

  {
    double worst = 0.0;
    for (double R : radii) {
      for (double xi : log_grid(1e-3, 1e3, n_points)) {
        const double exact = 2.0 * std::sin(R * xi) / xi;
        if (exact == 0.0) continue;
        worst = std::max(worst, std::abs(ball_fourier_radial(1, R, xi) - exact) / std::abs(exact));
      }
    }
    checks.push_back({"ball_fourier_d1_rel", worst, tol_ball, worst <= tol_ball, "max relative error vs 2 sin(R xi)/xi"});
  }
  for (int d = 1; d <= 3; ++d) {
    const double mass = integrate_against_ell(d, 1.0, [](double) { return 1.0; });
    const double err = std::abs(mass - 1.0);
    checks.push_back({"ell_mass_d" + std::to_string(d), err, tol_mass, err <= tol_mass, "|int ell_1 - 1|"});
  }
  {
    double worst = 0.0;
    for (int i = 1; i <= n_points; ++i) {
      const double x = kBesselCrossover * i / n_points;
      const double exact = std::sqrt(2.0 / (M_PI * x)) * std::sin(x);
      worst = std::max(worst, std::abs(bessel_j_quadrature(0.5, x) - exact));
    }
    checks.push_back({"bessel_half_closed_form", worst, tol_half, worst <= tol_half,
                      "max |J_1/2 - sqrt(2/(pi x)) sin x| on (0, 30]"});
  }
  {
    double worst = 0.0;
    for (double p : {0.5, 1.0, 1.5, 2.5}) {
      for (double x : {kBesselCrossover - 1.0, kBesselCrossover, kBesselCrossover + 1.0}) {
        worst = std::max(worst, std::abs(bessel_j_quadrature(p, x) - bessel_j_asymptotic(p, x)));
      }
    }
    checks.push_back({"bessel_crossover_overlap", worst, tol_cross, worst <= tol_cross,
                      "quadrature vs asymptotic near the crossover"});
  }
  {
    double worst = 0.0;
    for (double p : {0.5, 1.0, 1.5}) {
      for (double x : log_grid(1e-3, 1e4, n_points)) worst = std::max(worst, std::sqrt(x) * std::abs(bessel_j(p, x)));
    }
    checks.push_back({"bessel_sqrt_envelope", worst, env_bound, worst <= env_bound,
                      "sup sqrt(x) |J_p(x)| for p in {1/2, 1, 3/2}"});
  }
  {
    RandomStream rs(seed, StreamTag::test, 0);
    double asym = 0.0;
    double min_phi = std::numeric_limits<double>::infinity();
    for (int d = 1; d <= 2; ++d) {
      const CovarianceModel models[] = {CovarianceModel::gaussian(d), CovarianceModel::exponential(d),
                                        CovarianceModel::bump(d), CovarianceModel::riesz(d, 0.5)};
      for (const auto& m : models) {
        std::vector<double> x(d), mx(d);
        for (int i = 0; i < 10000; ++i) {
          for (int k = 0; k < d; ++k) {
            x[k] = 10.0 * (2.0 * rs.uniform() - 1.0);
            mx[k] = -x[k];
          }
          asym = std::max(asym, std::abs(m.gamma_at(x) - m.gamma_at(mx)));
          min_phi = std::min(min_phi, m.phi_at(x));
        }
      }
    }
    checks.push_back({"gamma_symmetry", asym, 0.0, asym == 0.0, "max |gamma(x) - gamma(-x)| at 10^4 points per model"});
    checks.push_back({"phi_nonnegative", min_phi, 0.0, min_phi >= 0.0, "min phi at 10^4 points per model"});
  }
  {
    const auto g = CovarianceModel::gaussian(1);
    quad::Options qo;
    qo.rel_tol = 1e-12;
    const double inf = std::numeric_limits<double>::infinity();
    const double mass = quad::gauss_kronrod([&](double k) { return g.phi_radial(std::abs(k)); }, -inf, inf, qo).value;
    const double err = std::abs(mass - g.gamma_zero());
    checks.push_back({"gaussian_phi_mass", err, tol_phi, err <= tol_phi, "|int phi - gamma(0)|"});
  }
  {
    // Approximation of the identity: int ell_R f -> f(0) for a smooth f.
    std::vector<double> errs;
    for (double R : {1.0, 4.0, 16.0}) {
      errs.push_back(std::abs(integrate_against_ell(1, R, [](double r) { return std::exp(-r * r); }) - 1.0));
    }
    const bool decreasing = errs[1] < errs[0] && errs[2] < errs[1];
    checks.push_back({"ell_sifting", errs.back(), json::array({errs[0], errs[1]}), decreasing,
                      "|int ell_R exp(-x^2) - 1| strictly decreasing over R = 1, 4, 16"});
  }

  std::ostringstream csv;
  csv << "check,measured,target,pass,seed\n";
  for (const auto& c : checks) {
    csv << c.name << ',' << fmt(c.measured) << ',' << (c.target.is_number() ? fmt(c.target.get<double>()) : "see-verdict")
        << ',' << (c.pass ? 1 : 0) << ',' << seed << '\n';
  }
  json v;
  v["command"] = "special-check";
  v["master_seed"] = seed;
  v["checks"] = checks_json(checks);
  v["pass"] = all_pass(checks);
  return finish_run("special-check", v, csv.str(), opt);
}

// ---------------------------------------------------------------------------
// bm

HermiteSeries parse_series(Section& s) {
  const json& j = s.raw("series");
  if (!j.is_object() || j.empty()) cfg_fail("series must be an object mapping order to coefficient");
  std::map<int, double> coeffs;
  for (const auto& item : j.items()) {
    int p = 0;
    std::size_t used = 0;
    try {
      p = std::stoi(item.key(), &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.key().size() || p < 1 || p > 12) cfg_fail("series order '" + item.key() + "' must be an integer in 1..12");
    if (!item.value().is_number()) cfg_fail("series coefficient of order " + item.key() + " must be a number");
    coeffs[p] = item.value().get<double>();
  }
  return validated([&] { return HermiteSeries(coeffs); });
}

RunOutcome cmd_bm(const json& cfg, const RunOptions& opt) {
  Section s(cfg, "");
  check_command_field(s, "bm");
  BMExperiment exp;
  const int d = static_cast<int>(s.integer("d", 1, 1));
  if (d > 2) cfg_fail("d must be 1 or 2 for field simulation");
  exp.model = CovarianceModel::parse(s.str("model", std::nullopt), d);
  if (!s.has("series")) cfg_fail("missing required field 'series'");
  exp.series = parse_series(s);
  exp.radii = s.nums("radii", std::nullopt);
  Section g = s.sub("grid");
  exp.grid.d = d;
  exp.grid.half_extent = g.positive("half_extent", std::nullopt);
  exp.grid.spacing = g.positive("spacing", std::nullopt);
  g.finish();
  exp.n_reps = static_cast<std::size_t>(s.integer("n_reps", std::nullopt, 1));
  exp.master_seed = master_seed(s, opt);
  Section sm = s.sub("sampler");
  const std::string method = sm.str("method", "circulant");
  if (method == "circulant") {
    exp.sampler.method = SamplerMethod::circulant;
    exp.sampler.circulant.max_padding_factor = static_cast<int>(sm.integer("max_padding_factor", 8, 1));
  } else if (method == "spectral") {
    exp.sampler.method = SamplerMethod::spectral;
    exp.sampler.cutoff = sm.positive("cutoff", std::nullopt);
    exp.sampler.modes_per_axis = static_cast<int>(sm.integer("modes_per_axis", std::nullopt, 2));
  } else {
    cfg_fail("sampler.method must be 'circulant' or 'spectral'");
  }
  sm.finish();
  Section tol = s.sub("tolerances");
  const double tol_var = tol.positive("variance_rel", 0.10);
  const double ks_min = tol.positive("ks_p_min", 0.01);
  const double m4_lo = tol.positive("fourth_moment_min", 2.8);
  const double m4_hi = tol.positive("fourth_moment_max", 3.2);
  const double tol_routes = tol.positive("route_rel", 0.01);
  tol.finish();
  s.finish();

  if (!exp.model.finite_at_zero()) {
    cfg_fail("model " + exp.model.id() + " has infinite variance; Hermite functionals of it are undefined");
  }
  if (exp.sampler.method == SamplerMethod::circulant && d != 1) cfg_fail("the circulant sampler supports d = 1 only");
  validated([&] { exp.grid.validate(); });
  for (double R : exp.radii) {
    if (!(R > 0.0 && R <= exp.grid.half_extent)) cfg_fail("radius " + fmt(R) + " is not inside (0, grid.half_extent]");
  }
  // Finite limit variance (and finite absolute-value integrals) are preconditions.
  const double sigma2 = validated([&] { return limit_variance_bm(exp.model, exp.series); });
  std::optional<double> sigma2_kernel;
  if (d == 1) {
    std::vector<DiscreteKernel> kernels;
    const Axis point = Axis::point(0.0, 1.0 / std::sqrt(exp.model.gamma_zero()));
    for (const auto& [q, c] : exp.series.coeffs()) kernels.push_back(DiscreteKernel::tensor_power(point, {1.0}, q).scaled(c));
    sigma2_kernel = validated([&] { return limit_variance_kernel(kernels, exp.model).sigma2; });
  }

  const MCEnsemble ens = run_bm(exp);
  ens.check_unique_seeds();

  std::vector<Check> checks;
  json per_r = json::array();
  const double r_final = *std::max_element(exp.radii.begin(), exp.radii.end());
  std::string diag_error;
  for (double R : ens.groups()) {
    const auto vals = ens.values(R);
    json o;
    o["R"] = R;
    o["n"] = vals.size();
    try {
      const MomentSummary m = moments(vals);
      const CLTReport rep = clt_diagnostics(vals, sigma2);
      const double rel = std::abs(m.variance - sigma2) / sigma2;
      const bool var_ok = rel <= tol_var;
      const bool ks_ok = rep.ks_p_value > ks_min;
      const bool m4_ok = rep.fourth_moment_ratio >= m4_lo && rep.fourth_moment_ratio <= m4_hi;
      o["sigma2_empirical"] = m.variance;
      o["sigma2_empirical_se"] = m.variance_se;
      o["variance_rel_error"] = rel;
      o["ks_statistic"] = rep.ks_statistic;
      o["ks_p"] = rep.ks_p_value;
      o["ks_sigma_source"] = rep.sigma_source;
      o["fourth_moment"] = rep.fourth_moment_ratio;
      o["fourth_moment_se"] = rep.fourth_moment_ratio_se;
      o["pass_variance"] = var_ok;
      o["pass_ks"] = ks_ok;
      o["pass_fourth_moment"] = m4_ok;
      if (R == r_final) {
        checks.push_back({"variance_rel_error", rel, tol_var, var_ok, "R = " + fmt(R)});
        checks.push_back({"ks_p", rep.ks_p_value, ks_min, ks_ok, "R = " + fmt(R) + "; normality proxy"});
        checks.push_back({"fourth_moment", rep.fourth_moment_ratio, json::array({m4_lo, m4_hi}), m4_ok,
                          "R = " + fmt(R) + "; normality proxy"});
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::insufficient_data) throw;
      o["diagnostics"] = std::string("insufficient-data: ") + e.what();
      if (R == r_final) diag_error = o["diagnostics"];
    }
    per_r.push_back(o);
  }
  if (!diag_error.empty()) checks.push_back({"diagnostics", 0.0, "at least 30 replications", false, diag_error});
  if (sigma2_kernel) {
    const double rel = std::abs(*sigma2_kernel - sigma2) / sigma2;
    checks.push_back({"variance_routes_agree", rel, tol_routes, rel <= tol_routes,
                      "kernel route vs covariance route for the limit variance"});
  }

  json v;
  v["command"] = "bm";
  v["model"] = exp.model.id();
  v["master_seed"] = exp.master_seed;
  v["n_reps"] = exp.n_reps;
  v["sampler"] = sampler_name(exp.sampler.method);
  v["sigma2_theory"] = sigma2;
  v["sigma2_kernel_route"] = sigma2_kernel ? json(*sigma2_kernel) : json(nullptr);
  v["per_radius"] = per_r;
  v["normality_note"] =
      "KS and fourth-moment checks are proxies for the total-variation statements, which are not estimated";
  v["checks"] = checks_json(checks);
  v["pass"] = all_pass(checks);
  return finish_run("bm", v, ens.to_csv(), opt);
}

// ---------------------------------------------------------------------------
// she

struct SheRow {
  std::string quantity;
  double t = NAN;
  double s = NAN;
  double R = NAN;
  double estimate = NAN;
  double std_error = NAN;
  std::size_t n = 0;
};

std::string she_csv(const std::vector<SheRow>& rows, std::uint64_t seed) {
  std::ostringstream os;
  os << "quantity,t,s,R,estimate,std_error,n,seed\n";
  auto cell = [](double x) { return std::isnan(x) ? std::string() : fmt(x); };
  for (const auto& r : rows) {
    os << r.quantity << ',' << cell(r.t) << ',' << cell(r.s) << ',' << cell(r.R) << ',' << fmt(r.estimate) << ','
       << cell(r.std_error) << ',' << r.n << ',' << seed << '\n';
  }
  return os.str();
}

bool strictly_increasing(const std::vector<double>& v) {
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) return false;
  }
  return true;
}

RunOutcome cmd_she(const json& cfg, const RunOptions& opt) {
  Section s(cfg, "");
  check_command_field(s, "she");
  SHEConfig sc;
  const int d = static_cast<int>(s.integer("d", 1, 1));
  if (d > 3) cfg_fail("d must be 1, 2 or 3");
  sc.gamma0 = TemporalKernel::parse(s.str("gamma0", "const:value=1"));
  sc.gamma1 = CovarianceModel::parse(s.str("gamma1", std::nullopt), d);
  sc.bm_steps = static_cast<int>(s.integer("bm_steps", 256, 1));
  sc.n_paths = static_cast<std::size_t>(s.integer("n_paths", 10000, 1));
  sc.n_z = static_cast<std::size_t>(s.integer("n_z", 1000, 1));
  sc.z_proposal_scale = s.num("z_proposal_scale", 0.0);
  sc.n_spectral = static_cast<std::size_t>(s.integer("n_spectral", 200000, 2));
  sc.master_seed = master_seed(s, opt);
  const std::vector<std::string> tasks = s.strs("tasks", std::vector<std::string>{"first_chaos"});
  const std::vector<double> times = s.nums("times", std::vector<double>{1.0});
  const std::vector<double> radii = s.nums("radii", std::vector<double>{10.0, 30.0, 100.0});
  std::vector<std::pair<double, double>> pairs;
  if (s.has("sigma_pairs")) {
    const json& jp = s.raw("sigma_pairs");
    if (!jp.is_array() || jp.empty()) cfg_fail("sigma_pairs must be a non-empty array of [s, t] pairs");
    for (const auto& e : jp) {
      if (!e.is_array() || e.size() != 2 || !e[0].is_number() || !e[1].is_number()) {
        cfg_fail("sigma_pairs entries must be [s, t] number pairs");
      }
      pairs.emplace_back(e[0].get<double>(), e[1].get<double>());
    }
  } else {
    pairs = {{0.5, 1.0}};
  }
  std::vector<int> orders;
  for (double p : s.nums("moment_orders", std::vector<double>{2.0})) {
    if (p < 1.0 || p != std::floor(p)) cfg_fail("moment_orders must hold integers >= 1");
    orders.push_back(static_cast<int>(p));
  }
  Section tol = s.sub("tolerances");
  const double tol_first = tol.positive("first_chaos_rel", 0.05);
  const double tol_kappa = tol.positive("kappa_rel", 0.05);
  const double k_first = tol.positive("first_order_se_multiple", 3.0);
  const double tol_rel_se = tol.positive("first_order_rel_se", 0.05);
  const double k_sym = tol.positive("symmetry_se_multiple", 3.0);
  const double k_drop = tol.positive("share_drop_se_multiple", 2.0);
  tol.finish();
  s.finish();

  static const std::set<std::string> known = {"first_chaos", "sigma", "first_order", "kappa_beta", "second_chaos_share",
                                              "moments"};
  for (const auto& t : tasks) {
    if (!known.count(t)) cfg_fail("unknown she task '" + t + "'");
  }
  for (double t : times) {
    if (!(t > 0.0)) cfg_fail("times must be positive");
  }
  for (double R : radii) {
    if (!(R > 0.0)) cfg_fail("radii must be positive");
  }
  for (const auto& [a, b] : pairs) {
    if (!(a > 0.0 && b > 0.0)) cfg_fail("sigma_pairs times must be positive");
  }
  const bool riesz = sc.gamma1.kind() == ModelKind::riesz;
  auto has_task = [&](const std::string& t) { return std::find(tasks.begin(), tasks.end(), t) != tasks.end(); };
  if (riesz && (has_task("sigma") || has_task("first_order"))) {
    cfg_fail("tasks 'sigma' and 'first_order' need gamma1 with finite total mass");
  }
  if (!riesz && (has_task("kappa_beta") || has_task("second_chaos_share"))) {
    cfg_fail("tasks 'kappa_beta' and 'second_chaos_share' need a riesz gamma1");
  }
  // Structural config errors map to exit 2; Dalang's condition is checked separately.
  {
    SHEConfig structural = sc;
    structural.gamma1 = CovarianceModel::gaussian(d);
    validated([&] { structural.validate(); });
  }
  const DalangReport dal = dalang_check(sc.gamma1);
  require(dal.finite, ErrorCode::numerical_failure,
          "Dalang's condition int phi(xi) / (1 + |xi|^2) dxi < inf fails for " + sc.gamma1.id());

  std::vector<SheRow> rows;
  std::vector<Check> checks;
  json results;
  const double omega = ball_volume(d);

  if (has_task("first_chaos")) {
    json arr = json::array();
    for (double t : times) {
      std::vector<double> normalized;
      for (double R : radii) {
        const double v = first_chaos_covariance(sc.gamma1, sc.gamma0, R, t, t);
        const double scale = riesz ? std::pow(R, 2.0 * d - sc.gamma1.beta()) : std::pow(R, d);
        normalized.push_back(v / scale);
        rows.push_back({"first_chaos_variance", t, t, R, v, NAN, 0});
        rows.push_back({"first_chaos_normalized", t, t, R, v / scale, NAN, 0});
      }
      const double target = riesz ? kappa_beta(d, sc.gamma1.beta(), t, sc.gamma0)
                                  : omega * first_order_closed_form(t, t, sc);
      const double rel = std::abs(normalized.back() - target) / target;
      const std::string tag = "t = " + fmt(t);
      if (riesz) {
        checks.push_back({"first_chaos_increasing", normalized.back(), json(), strictly_increasing(normalized),
                          tag + "; R^{beta-2d} Var(Pi_1) strictly increasing over the radii"});
      }
      checks.push_back({"first_chaos_limit_rel", rel, riesz ? tol_kappa : tol_first, rel <= (riesz ? tol_kappa : tol_first),
                        tag + "; largest radius vs " + std::string(riesz ? "kappa_beta" : "omega_d gamma1(R^d) int int gamma0")});
      json o;
      o["t"] = t;
      o["radii"] = radii;
      o["normalized"] = normalized;
      o["target"] = target;
      arr.push_back(o);
    }
    results["first_chaos"] = arr;
  }

  if (has_task("kappa_beta")) {
    json arr = json::array();
    for (double t : times) {
      const double k = kappa_beta(d, sc.gamma1.beta(), t, sc.gamma0);
      rows.push_back({"kappa_beta", t, t, NAN, k, NAN, 0});
      arr.push_back({{"t", t}, {"kappa_beta", k}});
      checks.push_back({"kappa_beta_finite", k, json(), std::isfinite(k) && k > 0.0, "t = " + fmt(t)});
    }
    results["kappa_beta"] = arr;
  }

  if (has_task("first_order")) {
    json arr = json::array();
    for (double t : times) {
      const MCEstimate e = first_order_integral(t, t, sc);
      const double exact = first_order_closed_form(t, t, sc);
      rows.push_back({"first_order_mc", t, t, NAN, e.value, e.std_error, e.n});
      rows.push_back({"first_order_exact", t, t, NAN, exact, NAN, 0});
      const double z = std::abs(e.value - exact) / e.std_error;
      const double rel_se = e.std_error / std::abs(e.value);
      checks.push_back({"first_order_within_se", z, k_first, z <= k_first, "t = " + fmt(t) + "; |MC - exact| / SE"});
      checks.push_back({"first_order_rel_se", rel_se, tol_rel_se, rel_se < tol_rel_se, "t = " + fmt(t) + "; SE / estimate"});
      arr.push_back({{"t", t}, {"estimate", e.value}, {"std_error", e.std_error}, {"exact", exact}});
    }
    results["first_order"] = arr;
  }

  if (has_task("sigma")) {
    json arr = json::array();
    for (const auto& [a, b] : pairs) {
      const MCEstimate st = sigma_limit(a, b, sc);
      const MCEstimate ts = sigma_limit(b, a, sc);
      rows.push_back({"sigma", b, a, NAN, st.value, st.std_error, st.n});
      rows.push_back({"sigma", a, b, NAN, ts.value, ts.std_error, ts.n});
      const double se = std::hypot(st.std_error, ts.std_error);
      const double z = std::abs(st.value - ts.value) / se;
      const double lower = omega * first_order_closed_form(a, b, sc);
      const std::string tag = "(s, t) = (" + fmt(a) + ", " + fmt(b) + ")";
      checks.push_back({"sigma_symmetry", z, k_sym, z <= k_sym, tag + "; |Sigma_st - Sigma_ts| / SE"});
      checks.push_back({"sigma_positive", st.value, 0.0, st.value > 0.0 && ts.value > 0.0, tag});
      const double margin = (st.value - lower) / st.std_error;
      checks.push_back({"sigma_above_first_order", margin, -k_sym, margin >= -k_sym,
                        tag + "; (Sigma - omega_d first-order term) / SE"});
      arr.push_back({{"s", a}, {"t", b}, {"sigma_st", st.value}, {"sigma_st_se", st.std_error}, {"sigma_ts", ts.value},
                     {"sigma_ts_se", ts.std_error}, {"first_order_term", lower}});
    }
    results["sigma"] = arr;
  }

  if (has_task("moments")) {
    json arr = json::array();
    for (double t : times) {
      for (int p : orders) {
        if (riesz) {
          // Riesz moments are reported at z = 0; the z-integral diverges.
          std::vector<double> z(d, 0.0);
          const MCEstimate e = moment_beta_p(t, z, p, sc);
          rows.push_back({"moment_beta_at_0_p" + std::to_string(p), t, t, NAN, e.value, e.std_error, e.n});
          arr.push_back({{"t", t}, {"p", p}, {"moment_at_0", e.value}, {"std_error", e.std_error}});
          checks.push_back({"moment_conclusive", e.std_error / std::abs(e.value), 0.5, !e.inconclusive,
                            "t = " + fmt(t) + ", p = " + std::to_string(p)});
        } else {
          const MCEstimate e = sigma_p(t, p, sc);
          rows.push_back({"sigma_p" + std::to_string(p), t, t, NAN, e.value, e.std_error, e.n});
          arr.push_back({{"t", t}, {"p", p}, {"sigma_p", e.value}, {"std_error", e.std_error}});
          checks.push_back({"moment_conclusive", e.std_error / std::abs(e.value), 0.5, !e.inconclusive,
                            "t = " + fmt(t) + ", p = " + std::to_string(p)});
        }
      }
    }
    results["moments"] = arr;
  }

  if (has_task("second_chaos_share")) {
    json arr = json::array();
    for (double t : times) {
      const ChaosShareResult r = riesz_second_chaos_share(t, sc.gamma0, radii, sc);
      for (const auto& c : r.per_R) rows.push_back({"second_chaos_share", t, t, c.R, c.value, c.std_error, sc.n_spectral});
      rows.push_back({"second_chaos_share_drop", t, t, NAN, r.drop, r.drop_se, sc.n_spectral});
      const double z = r.drop / r.drop_se;
      checks.push_back({"second_chaos_share_drop", z, k_drop, z > k_drop,
                        "t = " + fmt(t) + "; (share at first R - share at last R) / paired SE"});
      json o;
      o["t"] = t;
      o["drop"] = r.drop;
      o["drop_se"] = r.drop_se;
      json per = json::array();
      for (const auto& c : r.per_R) per.push_back({{"R", c.R}, {"value", c.value}, {"std_error", c.std_error}});
      o["per_R"] = per;
      arr.push_back(o);
    }
    results["second_chaos_share"] = arr;
  }

  json v;
  v["command"] = "she";
  v["gamma0"] = sc.gamma0.id();
  v["gamma1"] = sc.gamma1.id();
  v["master_seed"] = sc.master_seed;
  v["dalang_integral"] = dal.integral;
  // Finite modified integral (2 beta - d in (0, 2) for riesz) allows the part (1) reading; otherwise part (2).
  v["modified_dalang_finite"] = dal.modified_finite;
  v["results"] = results;
  v["checks"] = checks_json(checks);
  v["pass"] = all_pass(checks);
  return finish_run("she", v, she_csv(rows, sc.master_seed), opt);
}

// ---------------------------------------------------------------------------
// tail-bound

RunOutcome cmd_tail_bound(const json& cfg, const RunOptions& opt) {
  Section s(cfg, "");
  check_command_field(s, "tail-bound");
  SHEConfig sc;
  const int d = static_cast<int>(s.integer("d", 1, 1));
  if (d > 3) cfg_fail("d must be 1, 2 or 3");
  sc.gamma0 = TemporalKernel::parse(s.str("gamma0", "const:value=1"));
  sc.gamma1 = CovarianceModel::parse(s.str("gamma1", std::nullopt), d);
  const double t = s.positive("t", 1.0);
  const double N = s.positive("N", 1.0);
  const std::string mode_s = s.str("mode", "standard");
  TailMode mode = TailMode::standard;
  if (mode_s == "modified") {
    mode = TailMode::modified;
  } else if (mode_s != "standard") {
    cfg_fail("mode must be 'standard' or 'modified'");
  }
  const int max_p = static_cast<int>(s.integer("max_p", 6, 2));
  const int compare_p = static_cast<int>(s.integer("compare_p", 2, 1));
  if (compare_p > max_p) cfg_fail("compare_p must not exceed max_p");
  sc.master_seed = master_seed(s, opt);
  Section mc = s.sub("mc");
  sc.bm_steps = static_cast<int>(mc.integer("bm_steps", 256, 1));
  sc.n_paths = static_cast<std::size_t>(mc.integer("n_paths", 10000, 1));
  sc.n_z = static_cast<std::size_t>(mc.integer("n_z", 1000, 1));
  mc.finish();
  Section tol = s.sub("tolerances");
  const double k_se = tol.positive("dominance_se_multiple", 3.0);
  tol.finish();
  s.finish();
  {
    SHEConfig structural = sc;
    structural.gamma1 = CovarianceModel::gaussian(d);
    validated([&] { structural.validate(); });
  }
  if (sc.gamma1.kind() == ModelKind::riesz && mode == TailMode::standard) {
    cfg_fail("the standard tail bound needs sup phi < inf; use mode 'modified' for riesz");
  }

  const TailBound b = validated([&] { return chaos_tail_bound(sc.gamma1, sc.gamma0, t, N, mode, max_p); });
  const double gate = 4.0 * b.Gamma_t * b.C_N;
  std::vector<Check> checks;
  checks.push_back({"gate", gate, 1.0, gate < 1.0,
                    "4 Gamma_t C_N at N = " + fmt(b.N) + (b.gate_at_requested ? "" : " (found by bisection)")});

  std::vector<SheRow> rows;
  for (std::size_t i = 0; i < b.per_p.size(); ++i) rows.push_back({"bound_p" + std::to_string(i + 1), t, t, NAN, b.per_p[i], NAN, 0});
  rows.push_back({"bound_geometric_sum", t, t, NAN, b.geometric_sum, NAN, 0});
  json mc_json = nullptr;
  if (sc.gamma1.integrable()) {
    const MCEstimate e = moment_integral(t, compare_p, sc);
    const double bound = b.per_p[compare_p - 1];
    rows.push_back({"mc_moment_p" + std::to_string(compare_p), t, t, NAN, e.value, e.std_error, e.n});
    const double margin = (bound - e.value) / e.std_error;
    checks.push_back({"bound_dominates_mc", margin, k_se, margin >= k_se,
                      "p = " + std::to_string(compare_p) + "; (bound - MC) / SE"});
    mc_json = {{"p", compare_p}, {"estimate", e.value}, {"std_error", e.std_error}, {"bound", bound}};
  }

  json v;
  v["command"] = "tail-bound";
  v["gamma0"] = sc.gamma0.id();
  v["gamma1"] = sc.gamma1.id();
  v["mode"] = mode_s;
  v["master_seed"] = sc.master_seed;
  v["t"] = t;
  v["requested_N"] = b.requested_N;
  v["N"] = b.N;
  v["gate_at_requested"] = b.gate_at_requested;
  v["C_N"] = b.C_N;
  v["D_N"] = b.D_N;
  v["Gamma_t"] = b.Gamma_t;
  v["phi_sup"] = b.phi_sup;
  json per = json::array();
  for (double x : b.per_p) per.push_back(num_json(x));
  v["per_p_bounds"] = per;
  v["geometric_sum"] = num_json(b.geometric_sum);
  v["mc"] = mc_json;
  v["checks"] = checks_json(checks);
  v["pass"] = all_pass(checks);
  return finish_run("tail-bound", v, she_csv(rows, sc.master_seed), opt);
}

// ---------------------------------------------------------------------------
// report

std::string read_text(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) fail(ErrorCode::io_error, "cannot read " + p.string());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

std::string csv_field(const std::string& x) {
  if (x.find_first_of(",\"\n") == std::string::npos) return x;
  std::string out = "\"";
  for (char c : x) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

RunOutcome cmd_report(const json& cfg, const RunOptions& opt) {
  Section s(cfg, "");
  check_command_field(s, "report");
  std::vector<std::string> inputs = s.strs("inputs", std::vector<std::string>{});
  s.finish();
  if (inputs.empty()) {
    std::error_code ec;
    if (fs::is_directory(opt.out_dir, ec)) {
      for (const auto& entry : fs::directory_iterator(opt.out_dir)) {
        const std::string name = entry.path().filename().string();
        const std::string suffix = "_verdict.json";
        if (name.size() > suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0 &&
            name != "report_verdict.json") {
          inputs.push_back(entry.path().string());
        }
      }
    }
    std::sort(inputs.begin(), inputs.end());
  }
  require(!inputs.empty(), ErrorCode::invalid_input, "report: no verdict files found in " + opt.out_dir);

  std::ostringstream csv;
  csv << "command,check,measured,target,pass,rows,seed\n";
  json commands = json::array();
  bool pass = true;
  for (const auto& path : inputs) {
    json verdict;
    try {
      verdict = json::parse(read_text(path));
    } catch (const json::exception& e) {
      fail(ErrorCode::invalid_input, "report: " + path + " is not valid JSON: " + e.what());
    }
    const std::string command = verdict.value("command", std::string("unknown"));
    const bool vpass = verdict.value("pass", false);
    const std::string seed = verdict.contains("master_seed") ? verdict["master_seed"].dump() : "";
    // Row count of the matching bulk CSV, when present.
    std::size_t rows = 0;
    const fs::path data = fs::path(path).parent_path() / (command + ".csv");
    if (fs::exists(data)) {
      const std::string text = read_text(data);
      const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
      rows = lines > 0 ? lines - 1 : 0;
    }
    if (verdict.contains("checks")) {
      for (const auto& c : verdict["checks"]) {
        const std::string measured = c.contains("measured") ? c["measured"].dump() : "";
        const std::string target = c.contains("target") ? c["target"].dump() : "";
        csv << csv_field(command) << ',' << csv_field(c.value("name", std::string())) << ',' << csv_field(measured) << ','
            << csv_field(target) << ',' << (c.value("pass", false) ? 1 : 0) << ',' << rows << ',' << seed << '\n';
      }
    }
    commands.push_back({{"command", command}, {"file", path}, {"pass", vpass}, {"rows", rows}});
    pass = pass && vpass;
  }
  json v;
  v["command"] = "report";
  v["inputs"] = commands;
  v["pass"] = pass;
  return finish_run("report", v, csv.str(), opt);
}

json parse_config(const std::string& text) {
  try {
    return json::parse(text.empty() ? std::string("{}") : text);
  } catch (const json::parse_error& e) {
    cfg_fail(std::string("malformed JSON config: ") + e.what());
  }
}

}  // namespace

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names = {"special-check", "bm", "she", "tail-bound", "report"};
  return names;
}

std::string default_config(const std::string& command) {
  if (command == "special-check" || command == "report") return "{}";
  if (command == "bm") {
    return R"({"model": "gaussian:scale=1", "d": 1, "series": {"2": 1.0}, "radii": [200],
"grid": {"half_extent": 220, "spacing": 0.25}, "n_reps": 2000, "master_seed": 1})";
  }
  if (command == "she") {
    return R"({"gamma0": "const:value=1", "gamma1": "gaussian:scale=1", "d": 1, "tasks": ["first_chaos"],
"times": [1], "radii": [10, 30, 100], "master_seed": 1})";
  }
  if (command == "tail-bound") return R"({"gamma1": "gaussian:scale=1", "t": 1, "N": 1, "master_seed": 1})";
  cfg_fail("unknown command '" + command + "'");
}

RunOutcome run_command(const std::string& command, const std::string& config_json, const RunOptions& opt) {
  const json cfg = parse_config(config_json);
  if (command == "special-check") return cmd_special_check(cfg, opt);
  if (command == "bm") return cmd_bm(cfg, opt);
  if (command == "she") return cmd_she(cfg, opt);
  if (command == "tail-bound") return cmd_tail_bound(cfg, opt);
  if (command == "report") return cmd_report(cfg, opt);
  cfg_fail("unknown command '" + command + "'");
}

}  // namespace chaosavg
