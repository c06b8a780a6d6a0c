#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "grand/error.hpp"
#include "grand/fluid.hpp"
#include "grand/model_io.hpp"
#include "grand/optimize.hpp"
#include "grand/oracle.hpp"
#include "support.hpp"

namespace grand {
namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no grand::Error thrown";
  return ErrorCode::InvalidArgument;
}

PackingModel cap3() { return parse_model(test::kCap3); }
PackingModel cap3_finite() { return parse_model(std::string(test::kCap3) + "[pools]\nh = 0.7\n"); }

std::vector<double> occupancy_rate(const FluidSystem& sys, const std::vector<double>& x) {
  const auto& set = sys.model().configs();
  const FluidRhs rhs = sys.rhs(x);
  std::vector<double> dy(static_cast<std::size_t>(set.num_types()), 0.0);
  for (std::size_t p = 0; p < set.size(); ++p) {
    for (int i = 0; i < set.num_types(); ++i) {
      dy[static_cast<std::size_t>(i)] += set.count(set.nonzero()[p], i) * rhs.dx[p];
    }
  }
  return dy;
}

TEST(FluidInfinite, OccupancyFollowsLinearOde) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  for (const std::vector<double>& x : {std::vector<double>{0.1, 0.2, 0.05, 0.3, 0.4},
                                       std::vector<double>{1.0, 0.0, 0.0, 0.0, 2.0}}) {
    const auto st = sys.evaluate(x);
    const auto dy = occupancy_rate(sys, x);
    for (std::size_t i = 0; i < 2; ++i) {
      EXPECT_NEAR(dy[i], model.lambda()[i] - model.mu()[i] * st.y[i], 1e-14);
    }
  }
}

TEST(FluidInfinite, SingleSlotClosedForm) {
  const auto model = test::single_type_model(1, 1, 1, "[grand]\na = 1\n");
  const auto sys = FluidSystem::infinite(model);
  const auto rhs = sys.rhs(std::vector<double>{0.3});
  ASSERT_EQ(rhs.rates.v.size(), 1u);
  EXPECT_NEAR(rhs.rates.v[0], 1.0, 1e-15);
  EXPECT_NEAR(rhs.dx[0], 1.0 - 0.3, 1e-15);
  EXPECT_NEAR(sys.evaluate(std::vector<double>{0.3}).availability[0], 0.3, 1e-15);
}

TEST(FluidInfinite, ArrivalsSplitByAvailability) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  const std::vector<double> x{0.1, 0.2, 0.05, 0.3, 0.4};
  const auto st = sys.evaluate(x);
  const auto rhs = sys.rhs(x);
  const auto& set = model.configs();
  for (int i = 0; i < 2; ++i) {
    double total = 0.0;
    for (std::size_t e : set.edges_of_type(i)) {
      const std::size_t src = set.edges()[e].source;
      EXPECT_NEAR(rhs.rates.v[e], model.lambda()[static_cast<std::size_t>(i)] * st.xbar[src] /
                                      st.availability[static_cast<std::size_t>(i)],
                  1e-15);
      total += rhs.rates.v[e];
    }
    EXPECT_NEAR(total, model.lambda()[static_cast<std::size_t>(i)], 1e-15);
  }
  EXPECT_NEAR(st.xbar[set.zero(0)], model.a()[0] * st.z, 1e-15);
}

TEST(FluidInfinite, DeparturesSumToService) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  const std::vector<double> x{0.1, 0.2, 0.05, 0.3, 0.4};
  const auto st = sys.evaluate(x);
  const auto rhs = sys.rhs(x);
  for (int i = 0; i < 2; ++i) {
    double total = 0.0;
    for (std::size_t e : model.configs().edges_of_type(i)) total += rhs.rates.w[e];
    EXPECT_NEAR(total, model.mu()[static_cast<std::size_t>(i)] * st.y[static_cast<std::size_t>(i)],
                1e-15);
  }
}

TEST(FluidInfinite, EquilibriumIsStationary) {
  for (const char* text : {test::kCap3}) {
    const auto model = parse_model(text);
    const auto sys = FluidSystem::infinite(model);
    const auto star = solve_product_form_infinite(model);
    for (double d : sys.rhs(star.x).dx) EXPECT_NEAR(d, 0.0, 1e-9);
    const auto traj = integrate(sys, star.x, {.t_end = 10.0, .dt = 1e-3, .sample_every = 1000});
    for (const auto& s : traj.samples) {
      for (std::size_t k = 0; k < star.x.size(); ++k) EXPECT_NEAR(s.x[k], star.x[k], 1e-6);
    }
  }
}

TEST(FluidInfinite, DegenerateAvailability) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  EXPECT_EQ(code_of([&] { sys.rhs(std::vector<double>(5, 0.0)); }),
            ErrorCode::DegenerateAvailability);
  EXPECT_EQ(code_of([&] { sys.rhs(std::vector<double>{-0.1, 0, 0, 0, 1}); }),
            ErrorCode::Domain);
}

TEST(FluidInfinite, MassStaysOnSimplexAndClosedForm) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  const std::vector<double> x0{0.05, 0.1, 0.3, 0.1, 0.5};
  const auto y0 = sys.evaluate(x0).y;
  const auto traj = integrate(sys, x0, {.t_end = 5.0, .dt = 1e-3, .sample_every = 100});
  for (const auto& s : traj.samples) {
    for (std::size_t i = 0; i < 2; ++i) {
      const double closed = model.rho()[i] + (y0[i] - model.rho()[i]) * std::exp(-model.mu()[i] * s.t);
      EXPECT_NEAR(s.y[i], closed, 1e-6);
    }
  }
  const auto on = oracle::hit_and_run(sys, oracle::interior_point(sys), 1, 3).front();
  const auto traj2 = integrate(sys, oracle::to_state(sys, on), {.t_end = 3.0, .dt = 1e-3, .sample_every = 500});
  for (const auto& s : traj2.samples) EXPECT_NEAR(s.z, 1.0, 1e-8);
}

TEST(FluidFinite, OccupancyFollowsLinearOdeWhilePoolsIdle) {
  const auto model = cap3_finite();
  const auto sys = FluidSystem::finite(model);
  const std::vector<double> x{0.1, 0.05, 0.02, 0.1, 0.1};
  const auto st = sys.evaluate(x);
  ASSERT_GT(st.xbar[model.configs().zero(0)], 0.0);
  const auto dy = occupancy_rate(sys, x);
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_NEAR(dy[i], model.lambda()[i] - model.mu()[i] * st.y[i], 1e-14);
  }
}

TEST(FluidFinite, PackedStateBlocks) {
  const auto model = cap3_finite();
  const auto sys = FluidSystem::finite(model);
  const auto& set = model.configs();
  std::vector<double> x(set.size(), 0.0);
  x[set.position(set.find(Configuration{0, {1, 1}}))] = 0.7;
  const auto rhs = sys.rhs(x);
  for (int i = 0; i < 2; ++i) {
    double accepted = 0.0;
    for (std::size_t e : set.edges_of_type(i)) accepted += rhs.rates.v[e];
    EXPECT_EQ(accepted, 0.0);
    EXPECT_NEAR(rhs.rates.blocked[static_cast<std::size_t>(i)],
                model.lambda()[static_cast<std::size_t>(i)], 1e-15);
  }
}

TEST(FluidFinite, OutsidePoolsIsRejected) {
  const auto model = cap3_finite();
  const auto sys = FluidSystem::finite(model);
  EXPECT_EQ(code_of([&] { sys.rhs(std::vector<double>{0.5, 0, 0, 0, 0.5}); }),
            ErrorCode::Domain);
}

TEST(FluidFinite, EquilibriumIsStationary) {
  const auto model = cap3_finite();
  const auto sys = FluidSystem::finite(model);
  const auto star = solve_product_form_finite(model);
  for (double d : sys.rhs(star.x).dx) EXPECT_NEAR(d, 0.0, 1e-9);
}

TEST(Lyapunov, ClosedForms) {
  const auto single = test::single_type_model(1, 1, 1, "[grand]\na = 1\n[pools]\nh = 1\n");
  EXPECT_NEAR(FluidSystem::infinite(single).lyapunov(std::vector<double>{1.0}), -1.0, 1e-15);
  // Idle pool only: x_0 = 1.
  EXPECT_NEAR(FluidSystem::finite(single).lyapunov(std::vector<double>{0.0}), -1.0, 1e-15);

  const auto model = cap3();
  const auto& set = model.configs();
  std::vector<double> x;
  double expected = 0.0;
  for (std::size_t bar : set.nonzero()) {
    x.push_back(model.a()[0] / set.factorial_product(bar));
    expected -= x.back();
  }
  EXPECT_NEAR(lyapunov_infinite(model, model.a(), x), expected, 1e-15);
}

TEST(Lyapunov, FiniteGradientMatchesCentralDifferences) {
  const auto model = cap3_finite();
  const auto& set = model.configs();
  std::vector<double> xbar{0.2, 0.1, 0.05, 0.02, 0.12, 0.08};
  ASSERT_EQ(xbar.size(), set.size_bar());
  for (std::size_t k = 0; k < xbar.size(); ++k) {
    const double h = 1e-6 * xbar[k];
    auto up = xbar, dn = xbar;
    up[k] += h;
    dn[k] -= h;
    const double fd = (lyapunov_finite(model, up) - lyapunov_finite(model, dn)) / (2 * h);
    const double exact = std::log(xbar[k] * set.factorial_product(k));
    EXPECT_LT(std::abs(fd - exact) / std::abs(exact), 1e-6) << k;
  }
}

TEST(Lyapunov, EquilibriumMinimizesOverSamples) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  const auto star = solve_product_form_infinite(model);
  const double best = sys.lyapunov(star.x);
  for (const auto& p : oracle::hit_and_run(sys, oracle::interior_point(sys), 200, 5)) {
    EXPECT_GE(sys.lyapunov(oracle::to_state(sys, p)), best - 1e-12);
  }
  const auto fmodel = cap3_finite();
  const auto fsys = FluidSystem::finite(fmodel);
  const double fbest = fsys.lyapunov(solve_product_form_finite(fmodel).x);
  for (const auto& p : oracle::hit_and_run(fsys, oracle::interior_point(fsys), 200, 6)) {
    EXPECT_GE(fsys.lyapunov(oracle::to_state(fsys, p)), fbest - 1e-12);
  }
}

TEST(Drift, ZeroAtEquilibriumNegativeElsewhere) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  const auto star = solve_product_form_infinite(model);
  EXPECT_NEAR(sys.drift(star.x), 0.0, 1e-9);

  // Scale one coordinate by 1.1 and rebalance its mass with e_small.
  const auto& set = model.configs();
  auto x = star.x;
  const std::size_t p = set.position(set.find(Configuration{0, {1, 1}}));
  const std::size_t unit = set.position(set.find(Configuration{0, {0, 1}}));
  const std::size_t big = set.position(set.find(Configuration{0, {1, 0}}));
  const double dx = 0.1 * x[p];
  x[p] += dx;
  x[big] -= dx;
  x[unit] -= dx;
  EXPECT_LT(sys.drift(x), 0.0);

  const auto fmodel = cap3_finite();
  const auto fsys = FluidSystem::finite(fmodel);
  EXPECT_NEAR(fsys.drift(solve_product_form_finite(fmodel).x), 0.0, 1e-9);
}

TEST(Drift, MatchesChainRuleOnDemandSurface) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  for (const auto& p : oracle::hit_and_run(sys, oracle::interior_point(sys), 20, 8)) {
    const auto x = oracle::to_state(sys, p);
    const double xi = sys.drift(x);
    EXPECT_NEAR(xi, oracle::chain_rule_drift(sys, x), 1e-10 * (1.0 + std::abs(xi)));
  }
  const auto fmodel = cap3_finite();
  const auto fsys = FluidSystem::finite(fmodel);
  for (const auto& p : oracle::hit_and_run(fsys, oracle::interior_point(fsys), 20, 9)) {
    const auto x = oracle::to_state(fsys, p);
    const double xi = fsys.drift(x);
    EXPECT_NEAR(xi, oracle::chain_rule_drift(fsys, x), 1e-10 * (1.0 + std::abs(xi)));
  }
}

TEST(Drift, DomainErrors) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  EXPECT_EQ(code_of([&] { sys.drift(std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.1}); }),
            ErrorCode::Domain);
  const auto fmodel = cap3_finite();
  const auto fsys = FluidSystem::finite(fmodel);
  const auto& set = fmodel.configs();
  std::vector<double> full(set.size(), 0.0);
  full[set.position(set.find(Configuration{0, {1, 1}}))] = 0.7;
  EXPECT_EQ(code_of([&] { fsys.drift(full); }), ErrorCode::Domain);
  // A zero coordinate on the demand surface gives -infinity.
  std::vector<double> sparse(set.size(), 0.0);
  sparse[set.position(set.find(Configuration{0, {1, 0}}))] = model.rho()[0];
  sparse[set.position(set.find(Configuration{0, {0, 1}}))] = model.rho()[1];
  EXPECT_EQ(sys.drift(sparse), -std::numeric_limits<double>::infinity());
}

TEST(Integrate, StepSizeTooLarge) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  EXPECT_EQ(code_of([&] {
              integrate(sys, std::vector<double>{0.05, 0.1, 0.3, 0.1, 0.5},
                        {.t_end = 10.0, .dt = 5.0, .sample_every = 1});
            }),
            ErrorCode::StepSize);
  EXPECT_EQ(code_of([&] {
              integrate(sys, std::vector<double>{0.05, 0.1, 0.3, 0.1, 0.5},
                        {.t_end = 1.0, .dt = -1.0, .sample_every = 1});
            }),
            ErrorCode::InvalidArgument);
}

TEST(Integrate, SamplingKeepsEndpoints) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  const auto traj = integrate(sys, std::vector<double>{0.05, 0.1, 0.3, 0.1, 0.5},
                              {.t_end = 1.0, .dt = 1e-3, .sample_every = 300});
  ASSERT_GE(traj.samples.size(), 2u);
  EXPECT_EQ(traj.samples.front().t, 0.0);
  EXPECT_NEAR(traj.samples.back().t, 1.0, 1e-12);
  EXPECT_TRUE(std::isnan(traj.samples.front().xi));
}

TEST(Projection, FiniteBox) {
  const auto model = cap3_finite();
  const auto sys = FluidSystem::finite(model);
  const auto p = project_feasible(sys, std::vector<double>{0.5, -0.2, 0.4, 0.1, 0.3});
  const double sum = std::accumulate(p.begin(), p.end(), 0.0);
  EXPECT_NEAR(sum, 0.7, 1e-12);
  for (double v : p) EXPECT_GE(v, 0.0);
  const auto inside = project_feasible(sys, std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.1});
  EXPECT_EQ(inside, (std::vector<double>{0.1, 0.1, 0.1, 0.1, 0.1}));
}

TEST(Projection, PerturbationSizeAndDeterminism) {
  const auto model = cap3();
  const auto sys = FluidSystem::infinite(model);
  const auto star = solve_product_form_infinite(model);
  const auto a = perturb(sys, star.x, 0.01, 4);
  EXPECT_EQ(a, perturb(sys, star.x, 0.01, 4));
  EXPECT_NE(a, perturb(sys, star.x, 0.01, 5));
  double d = 0.0, n = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    d += (a[k] - star.x[k]) * (a[k] - star.x[k]);
    n += star.x[k] * star.x[k];
  }
  EXPECT_LE(std::sqrt(d), 0.01 * std::sqrt(n) + 1e-15);
}

}  // namespace
}  // namespace grand
