#include <gtest/gtest.h>

#include <cmath>
#include <string>

#include "chaosavg/chaosavg.h"

namespace {

struct Context {
  chaosavg_context* ctx = nullptr;
  Context() { chaosavg_context_create(&ctx); }
  ~Context() { chaosavg_context_destroy(ctx); }
};

}  // namespace

TEST(CApi, ModelEvaluation) {
  Context c;
  chaosavg_model* m = nullptr;
  ASSERT_EQ(chaosavg_model_create(c.ctx, "gaussian:scale=1", 1, &m), CHAOSAVG_OK);
  EXPECT_EQ(chaosavg_model_dim(m), 1);
  const double x = 0.5;
  double g = 0.0, phi = 0.0;
  ASSERT_EQ(chaosavg_model_gamma(c.ctx, m, &x, &g), CHAOSAVG_OK);
  EXPECT_NEAR(g, std::exp(-0.25), 1e-15);
  ASSERT_EQ(chaosavg_model_phi(c.ctx, m, &x, &phi), CHAOSAVG_OK);
  EXPECT_NEAR(phi, std::exp(-0.0625) / (2.0 * std::sqrt(M_PI)), 1e-15);
  const int orders[] = {2};
  const double coeffs[] = {1.0};
  double v = 0.0;
  ASSERT_EQ(chaosavg_limit_variance(c.ctx, m, orders, coeffs, 1, &v), CHAOSAVG_OK);
  EXPECT_NEAR(v, 4.0 * std::sqrt(M_PI / 2.0), 1e-9);
  chaosavg_model_destroy(m);
}

TEST(CApi, ErrorsCarryCodeAndMessage) {
  Context c;
  chaosavg_model* m = nullptr;
  EXPECT_EQ(chaosavg_model_create(c.ctx, "riesz:beta=1.5", 1, &m), CHAOSAVG_INVALID_CONFIG);
  EXPECT_EQ(m, nullptr);
  EXPECT_NE(std::string(chaosavg_last_error(c.ctx)), "");
  EXPECT_STREQ(chaosavg_status_name(CHAOSAVG_INVALID_CONFIG), "invalid-config");
  double out = 0.0;
  EXPECT_EQ(chaosavg_bessel_j(c.ctx, -1.0, 1.0, &out), CHAOSAVG_INVALID_ARGUMENT);
  EXPECT_EQ(chaosavg_ball_volume(c.ctx, 3, &out), CHAOSAVG_OK);
  EXPECT_EQ(std::string(chaosavg_last_error(c.ctx)), "");
  EXPECT_NEAR(out, 4.0 * M_PI / 3.0, 1e-14);
}

TEST(CApi, SpecialFunctions) {
  Context c;
  double j = 0.0, ell = 0.0;
  ASSERT_EQ(chaosavg_bessel_j(c.ctx, 0.5, 2.0, &j), CHAOSAVG_OK);
  EXPECT_NEAR(j, std::sqrt(2.0 / (M_PI * 2.0)) * std::sin(2.0), 1e-10);
  ASSERT_EQ(chaosavg_ell_r(c.ctx, 1, 2.0, 0.0, &ell), CHAOSAVG_OK);
  EXPECT_NEAR(ell, 2.0 / M_PI, 1e-12);
}

TEST(CApi, RunCommand) {
  Context c;
  ASSERT_EQ(chaosavg_set_threads(c.ctx, 1), CHAOSAVG_OK);
  char* verdict = nullptr;
  int passed = -1;
  ASSERT_EQ(chaosavg_run(c.ctx, "special-check", "{}", 0, 0, "capi_out", &verdict, &passed), CHAOSAVG_OK)
      << chaosavg_last_error(c.ctx);
  EXPECT_EQ(passed, 1);
  EXPECT_NE(std::string(verdict).find("\"pass\": true"), std::string::npos);
  chaosavg_string_free(verdict);
  verdict = nullptr;
  EXPECT_EQ(chaosavg_run(c.ctx, "special-check", "{\"bogus\": 1}", 0, 0, "capi_out", &verdict, &passed),
            CHAOSAVG_INVALID_CONFIG);
  EXPECT_EQ(verdict, nullptr);
  char* def = nullptr;
  ASSERT_EQ(chaosavg_default_config(c.ctx, "bm", &def), CHAOSAVG_OK);
  EXPECT_NE(std::string(def).find("gaussian"), std::string::npos);
  chaosavg_string_free(def);
  EXPECT_EQ(chaosavg_set_threads(c.ctx, -2), CHAOSAVG_INVALID_ARGUMENT);
  chaosavg_set_threads(c.ctx, 0);
}
