#pragma once

// Ensemble statistics: Kolmogorov-Smirnov normality proxy, moment summaries
// with jackknife standard errors, power-law fits, and CSV persistence.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace chaosavg {

struct EnsembleRow {
  double group = 0.0;  // grouping key, e.g. the radius R
  std::size_t replication = 0;
  double value = 0.0;
  std::uint64_t seed = 0;
};

class MCEnsemble {
 public:
  MCEnsemble() = default;
  explicit MCEnsemble(std::string label) : label_(std::move(label)) {}

  const std::string& label() const { return label_; }
  void add(double group, std::size_t replication, double value, std::uint64_t seed);
  const std::vector<EnsembleRow>& rows() const { return rows_; }
  bool empty() const { return rows_.empty(); }
  std::vector<double> groups() const;  // sorted distinct keys
  std::vector<double> values(double group) const;
  // Throws invalid-input when a seed repeats within a group.
  void check_unique_seeds() const;

  // Columns: group, replication, value, seed.
  std::string to_csv() const;
  static MCEnsemble from_csv(const std::string& text, std::string label = {});

 private:
  std::string label_;
  std::vector<EnsembleRow> rows_;
};

struct KSResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

// One-sample KS test against N(mean, sd^2) with the asymptotic Kolmogorov
// p-value. Needs at least 30 values.
KSResult ks_normal(std::span<const double> values, double mean, double sd);
// Survival function of the Kolmogorov distribution.
double kolmogorov_survival(double lambda);

struct MomentSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double skewness = 0.0;  // k3 / k2^{3/2}
  double excess_kurtosis = 0.0;  // k4 / k2^2
  double mean_se = 0.0;
  double variance_se = 0.0;
  double skewness_se = 0.0;
  double excess_kurtosis_se = 0.0;
  bool higher_defined = true;  // false for a constant sample
};

MomentSummary moments(std::span<const double> values);

struct PowerFit {
  double exponent = 0.0;
  double intercept = 0.0;  // log-scale intercept
  double r_squared = 0.0;
};

PowerFit power_fit(std::span<const double> x, std::span<const double> y);

}  // namespace chaosavg
