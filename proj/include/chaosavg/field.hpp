#pragma once

// Stationary Gaussian fields on regular grids in d = 1, 2.

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "chaosavg/kernels.hpp"

namespace chaosavg {

// Grid covering [-L, L]^d with spacing h; L / h must be an integer.
struct GridSpec {
  int d = 1;
  double half_extent = 0.0;
  double spacing = 0.0;

  void validate() const;
  int points_per_axis() const;  // 2 L / h + 1
  std::size_t sites() const;
  double coord(int i) const { return -half_extent + i * spacing; }
  // Row-major flat index of a multi-index.
  std::size_t flat(std::span<const int> idx) const;
  // Multi-index of a flat index.
  std::vector<int> unflatten(std::size_t flat) const;
  double norm_of_site(std::size_t flat) const;
};

enum class SamplerMethod { circulant, spectral };
const char* sampler_name(SamplerMethod m);

struct FieldSample {
  GridSpec grid;
  std::vector<double> values;
  std::uint64_t seed = 0;
  SamplerMethod method = SamplerMethod::circulant;
  std::string model_id;
  // Spectral sampler: gamma(0) minus the retained spectral mass (infinite
  // for riesz). Zero for the circulant sampler.
  double truncation_bias = 0.0;
};

struct CirculantOptions {
  int max_padding_factor = 8;      // embedding length up to this multiple of the minimal one
  double negative_tolerance = 1e-9;  // eigenvalues >= -tol * max are clipped to zero
};

// Exact stationary sampling in d = 1 by circulant embedding.
FieldSample sample_circulant(const CovarianceModel& model, const GridSpec& grid, std::uint64_t seed,
                             const CirculantOptions& opt = {});

// Reusable circulant factorization; sampling many replications only pays one
// eigen-decomposition.
class CirculantSampler {
 public:
  CirculantSampler(const CovarianceModel& model, const GridSpec& grid, const CirculantOptions& opt = {});
  FieldSample sample(std::uint64_t seed) const;
  std::size_t embedding_size() const { return sqrt_eig_.size(); }

 private:
  GridSpec grid_;
  std::string model_id_;
  std::vector<double> sqrt_eig_;  // sqrt(lambda_k / m)
};

struct SpectralOptions {
  double cutoff = 0.0;       // K: frequencies with |xi| <= K are retained
  int modes_per_axis = 0;    // M: cells per axis across [-K, K] (even)
};

// Spectral synthesis Y(x) = sum_k sqrt(w_k) (A_k cos(xi_k.x) + B_k sin(xi_k.x)),
// w_k the exact spectral mass of the cell around xi_k. Cells come in
// +/- pairs, so each pair is represented once with twice the mass.
FieldSample sample_spectral(const CovarianceModel& model, const GridSpec& grid, double cutoff, int modes_per_axis,
                            std::uint64_t seed);

class SpectralSampler {
 public:
  SpectralSampler(const CovarianceModel& model, const GridSpec& grid, double cutoff, int modes_per_axis);
  FieldSample sample(std::uint64_t seed) const;
  double truncation_bias() const { return bias_; }
  // Covariance of the synthesized field at a lag vector (exact for this sampler).
  double covariance(std::span<const double> lag) const;

 private:
  GridSpec grid_;
  std::string model_id_;
  std::vector<double> freq_;    // modes x d
  std::vector<double> weight_;  // sqrt(mass) per retained mode
  double bias_ = 0.0;
};

// Across-replication mean of Y_0 Y_lag (site 0 = grid centre) with its
// jackknife standard error. `lag` is in coordinates and must be on the grid.
struct Estimate {
  double value = 0.0;
  double std_error = 0.0;
};
Estimate empirical_covariance(std::span<const FieldSample> samples, std::span<const double> lag);

// CSV layout: a JSON header line prefixed by '#', then "site,value" rows.
std::string field_to_csv(const FieldSample& s);

}  // namespace chaosavg
