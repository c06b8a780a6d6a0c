#include <gtest/gtest.h>

#include <string>
#include <vector>

#include "grand/grand.h"

namespace {

std::string take(char* s) {
  std::string out = s ? s : "";
  grand_string_free(s);
  return out;
}

TEST(CApi, ModelRoundTrip) {
  grand_model* model = nullptr;
  ASSERT_EQ(grand_model_builtin("cap3", &model), GRAND_OK);
  EXPECT_EQ(grand_model_num_types(model), 2u);
  EXPECT_EQ(grand_model_num_server_types(model), 1u);
  EXPECT_EQ(grand_model_num_configs(model), 5u);
  char* label = nullptr;
  ASSERT_EQ(grand_model_config_label(model, 4, &label), GRAND_OK);
  EXPECT_EQ(take(label), "host(1 1)");
  EXPECT_EQ(grand_model_config_label(model, 5, &label), GRAND_E_INVALID_ARGUMENT);
  char* summary = nullptr;
  ASSERT_EQ(grand_model_summary(model, &summary), GRAND_OK);
  EXPECT_FALSE(take(summary).empty());
  grand_model_free(model);
  grand_model_free(nullptr);
}

TEST(CApi, Errors) {
  grand_model* model = nullptr;
  EXPECT_EQ(grand_model_parse("[types]\n", &model), GRAND_E_PARSE);
  EXPECT_EQ(model, nullptr);
  EXPECT_NE(std::string(grand_last_error()), "");
  EXPECT_EQ(grand_model_load("/nonexistent.model", &model), GRAND_E_IO);
  EXPECT_EQ(grand_model_builtin("nope", &model), GRAND_E_INVALID_ARGUMENT);
  EXPECT_EQ(grand_model_builtin("cap3", nullptr), GRAND_E_INVALID_ARGUMENT);
  EXPECT_STREQ(grand_status_string(GRAND_E_INFEASIBLE), "infeasible");
  EXPECT_STREQ(grand_version(), "1.0.0");
}

TEST(CApi, SimulateAndReadBack) {
  grand_model* model = nullptr;
  ASSERT_EQ(grand_model_builtin("erlang", &model), GRAND_OK);
  grand_run_options opt;
  grand_run_options_init(&opt);
  opt.policy = "grand-f";
  opt.r = 1;
  opt.horizon = 2000;
  opt.seed = 3;
  grand_run* run = nullptr;
  ASSERT_EQ(grand_simulate(model, &opt, &run), GRAND_OK) << grand_last_error();
  EXPECT_GT(grand_run_events(run), 0u);
  double blocking = -1;
  ASSERT_EQ(grand_run_blocking(run, &blocking, 1), GRAND_OK);
  EXPECT_GT(blocking, 0.0);
  EXPECT_LT(blocking, 0.1);
  EXPECT_NEAR(grand_run_pull_rate(run), 2.0, 0.05);
  double x[2];
  EXPECT_EQ(grand_run_x_mean(run, x, 2), GRAND_E_INVALID_ARGUMENT);
  char* csv = nullptr;
  ASSERT_EQ(grand_run_csv(run, &csv), GRAND_OK);
  EXPECT_NE(take(csv).find("blocking:call"), std::string::npos);
  grand_run_free(run);

  opt.policy = "grand-az";
  EXPECT_NE(grand_simulate(model, &opt, &run), GRAND_OK);
  opt.policy = "bogus";
  EXPECT_EQ(grand_simulate(model, &opt, &run), GRAND_E_INVALID_ARGUMENT);
  grand_model_free(model);
}

TEST(CApi, FluidAndSolve) {
  grand_model* model = nullptr;
  ASSERT_EQ(grand_model_builtin("cap3", &model), GRAND_OK);
  grand_fluid_options fo;
  grand_fluid_options_init(&fo);
  fo.mode = "inf";
  fo.x0 = "perturbed:0.05:2";
  fo.t_end = 2;
  grand_trajectory* traj = nullptr;
  ASSERT_EQ(grand_fluid_integrate(model, &fo, &traj), GRAND_OK) << grand_last_error();
  EXPECT_GT(grand_trajectory_size(traj), 2u);
  std::vector<double> x(5);
  EXPECT_EQ(grand_trajectory_final(traj, x.data(), x.size()), GRAND_OK);
  char* csv = nullptr;
  ASSERT_EQ(grand_trajectory_csv(traj, &csv), GRAND_OK);
  EXPECT_EQ(take(csv).find("# "), 0u);
  grand_trajectory_free(traj);

  fo.mode = "fin";
  EXPECT_EQ(grand_fluid_integrate(model, &fo, &traj), GRAND_E_INVALID_ARGUMENT);

  char* out = nullptr;
  ASSERT_EQ(grand_solve_csv(model, "lp", nullptr, 0, 1, &out), GRAND_OK);
  EXPECT_FALSE(take(out).empty());
  const double alphas[] = {0.1, 0.01};
  ASSERT_EQ(grand_solve_csv(model, "alpha-sweep", alphas, 2, 2, &out), GRAND_OK);
  EXPECT_FALSE(take(out).empty());
  EXPECT_EQ(grand_solve_csv(model, "product-fin", nullptr, 0, 1, &out), GRAND_E_INVALID_ARGUMENT);
  EXPECT_EQ(grand_solve_csv(model, "bogus", nullptr, 0, 1, &out), GRAND_E_INVALID_ARGUMENT);
  grand_model_free(model);
}

TEST(CApi, StudyAndAccept) {
  grand_model* model = nullptr;
  ASSERT_EQ(grand_model_builtin("cap3", &model), GRAND_OK);
  grand_study_options so;
  grand_study_options_init(&so);
  so.kind = "t1";
  const double r[] = {10, 20};
  const uint64_t seeds[] = {1, 2};
  so.r_values = r;
  so.num_r = 2;
  so.seeds = seeds;
  so.num_seeds = 2;
  so.horizon = 100;
  char* csv = nullptr;
  ASSERT_EQ(grand_study_csv(model, &so, &csv), GRAND_OK) << grand_last_error();
  EXPECT_FALSE(take(csv).empty());
  so.kind = "c2";
  EXPECT_EQ(grand_study_csv(model, &so, &csv), GRAND_E_INVALID_ARGUMENT);
  grand_model_free(model);

  char* text = nullptr;
  char* json = nullptr;
  ASSERT_EQ(grand_accept("pull", 1, nullptr, &text, &json), GRAND_OK);
  EXPECT_EQ(take(text).rfind("PASS", 0), 0u);
  EXPECT_NE(take(json).find("\"passed\""), std::string::npos);
  EXPECT_EQ(grand_accept("nope", 1, nullptr, &text, nullptr), GRAND_E_INVALID_ARGUMENT);
}

}  // namespace
