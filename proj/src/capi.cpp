#include "chaosavg/chaosavg.h"

#include <cstdlib>
#include <cstring>
#include <map>
#include <new>
#include <string>

#include "chaosavg/breuer_major.hpp"
#include "chaosavg/error.hpp"
#include "chaosavg/experiments.hpp"
#include "chaosavg/kernels.hpp"
#include "chaosavg/parallel.hpp"
#include "chaosavg/special.hpp"

struct chaosavg_context {
  std::string last_error;
};

struct chaosavg_model {
  chaosavg::CovarianceModel model;
};

namespace {

static_assert(CHAOSAVG_INVALID_ARGUMENT == static_cast<int>(chaosavg::ErrorCode::invalid_argument));
static_assert(CHAOSAVG_INVALID_CONFIG == static_cast<int>(chaosavg::ErrorCode::invalid_config));
static_assert(CHAOSAVG_EMPTY_ENSEMBLE == static_cast<int>(chaosavg::ErrorCode::empty_ensemble));

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (!p) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

// Runs f and converts exceptions into a status plus the context message.
template <class F>
chaosavg_status guarded(chaosavg_context* ctx, F&& f) {
  if (ctx) ctx->last_error.clear();
  try {
    f();
    return CHAOSAVG_OK;
  } catch (const chaosavg::Error& e) {
    if (ctx) ctx->last_error = e.what();
    return static_cast<chaosavg_status>(e.code());
  } catch (const std::exception& e) {
    if (ctx) ctx->last_error = e.what();
    return CHAOSAVG_INTERNAL_ERROR;
  } catch (...) {
    if (ctx) ctx->last_error = "unknown error";
    return CHAOSAVG_INTERNAL_ERROR;
  }
}

void need(bool cond, const char* what) { chaosavg::require(cond, chaosavg::ErrorCode::invalid_argument, what); }

}  // namespace

extern "C" {

const char* chaosavg_version(void) { return "0.1.0"; }

const char* chaosavg_status_name(chaosavg_status status) {
  if (status == CHAOSAVG_OK) return "ok";
  if (status == CHAOSAVG_INTERNAL_ERROR) return "internal-error";
  return chaosavg::error_code_name(static_cast<chaosavg::ErrorCode>(status));
}

chaosavg_status chaosavg_context_create(chaosavg_context** out) {
  if (!out) return CHAOSAVG_INVALID_ARGUMENT;
  *out = new (std::nothrow) chaosavg_context();
  return *out ? CHAOSAVG_OK : CHAOSAVG_INTERNAL_ERROR;
}

void chaosavg_context_destroy(chaosavg_context* ctx) { delete ctx; }

const char* chaosavg_last_error(const chaosavg_context* ctx) { return ctx ? ctx->last_error.c_str() : ""; }

chaosavg_status chaosavg_set_threads(chaosavg_context* ctx, int threads) {
  return guarded(ctx, [&] {
    need(threads >= 0, "thread count must be >= 0");
    chaosavg::set_thread_count(threads);
  });
}

void chaosavg_string_free(char* s) { std::free(s); }

chaosavg_status chaosavg_run(chaosavg_context* ctx, const char* command, const char* config_json, int has_seed,
                             uint64_t seed, const char* out_dir, char** verdict_json, int* passed) {
  return guarded(ctx, [&] {
    need(command && verdict_json && passed, "command, verdict_json and passed must not be null");
    chaosavg::RunOptions opt;
    if (has_seed) opt.seed = seed;
    if (out_dir) opt.out_dir = out_dir;
    const auto outcome = chaosavg::run_command(command, config_json ? config_json : "", opt);
    *verdict_json = dup_string(outcome.verdict_json);
    *passed = outcome.pass ? 1 : 0;
  });
}

chaosavg_status chaosavg_default_config(chaosavg_context* ctx, const char* command, char** config_json) {
  return guarded(ctx, [&] {
    need(command && config_json, "command and config_json must not be null");
    *config_json = dup_string(chaosavg::default_config(command));
  });
}

chaosavg_status chaosavg_model_create(chaosavg_context* ctx, const char* id, int dim, chaosavg_model** out) {
  return guarded(ctx, [&] {
    need(id && out, "id and out must not be null");
    *out = new chaosavg_model{chaosavg::CovarianceModel::parse(id, dim)};
  });
}

void chaosavg_model_destroy(chaosavg_model* model) { delete model; }

int chaosavg_model_dim(const chaosavg_model* model) { return model ? model->model.dim() : 0; }

chaosavg_status chaosavg_model_gamma(chaosavg_context* ctx, const chaosavg_model* model, const double* x,
                                     double* out) {
  return guarded(ctx, [&] {
    need(model && x && out, "model, x and out must not be null");
    *out = model->model.gamma_at({x, static_cast<std::size_t>(model->model.dim())});
  });
}

chaosavg_status chaosavg_model_phi(chaosavg_context* ctx, const chaosavg_model* model, const double* xi,
                                   double* out) {
  return guarded(ctx, [&] {
    need(model && xi && out, "model, xi and out must not be null");
    *out = model->model.phi_at({xi, static_cast<std::size_t>(model->model.dim())});
  });
}

chaosavg_status chaosavg_bessel_j(chaosavg_context* ctx, double order, double x, double* out) {
  return guarded(ctx, [&] {
    need(out != nullptr, "out must not be null");
    *out = chaosavg::bessel_j(order, x);
  });
}

chaosavg_status chaosavg_ball_volume(chaosavg_context* ctx, int dim, double* out) {
  return guarded(ctx, [&] {
    need(out != nullptr, "out must not be null");
    need(dim >= 1, "dimension must be >= 1");
    *out = chaosavg::ball_volume(dim);
  });
}

chaosavg_status chaosavg_ell_r(chaosavg_context* ctx, int dim, double R, double r, double* out) {
  return guarded(ctx, [&] {
    need(out != nullptr, "out must not be null");
    need(dim >= 1, "dimension must be >= 1");
    *out = chaosavg::ell_R_radial(dim, R, r);
  });
}

chaosavg_status chaosavg_limit_variance(chaosavg_context* ctx, const chaosavg_model* model, const int* orders,
                                        const double* coeffs, size_t n, double* out) {
  return guarded(ctx, [&] {
    need(model && orders && coeffs && out && n > 0, "model, orders, coeffs and out must be given with n > 0");
    std::map<int, double> c;
    for (size_t i = 0; i < n; ++i) c[orders[i]] += coeffs[i];
    *out = chaosavg::limit_variance_bm(model->model, chaosavg::HermiteSeries(c));
  });
}

}  // extern "C"
