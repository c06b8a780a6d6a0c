#include <gtest/gtest.h>

#include <cmath>
#include <map>

#include "grand/error.hpp"
#include "grand/model_io.hpp"
#include "grand/oracle.hpp"
#include "grand/simulator.hpp"
#include "support.hpp"

namespace grand {
namespace {

std::size_t bar_of(const PackingModel& m, std::vector<int> counts, int s = 0) {
  return m.configs().find(Configuration{s, std::move(counts)});
}

TEST(Simulator, TotalRate) {
  const auto model = test::single_type_model(1, 1, 1, "[grand]\na = 1\n");
  Simulator sim(model, Policy::GrandAZ, 1.0, 1);
  sim.set_state(SystemState::from_counts(model.configs(), {5}));
  EXPECT_DOUBLE_EQ(sim.total_rate(), 6.0);
  EXPECT_EQ(sim.state().y[0], 5);
  EXPECT_EQ(sim.state().z, 5);
}

TEST(Simulator, DepartureMovesServerDownOneEdge) {
  const auto model = test::single_type_model(2, 1, 1, "[grand]\na = 1\n");
  Simulator sim(model, Policy::GrandAZ, 1e-9, 4);
  sim.set_state(SystemState::from_counts(model.configs(), {0, 3}));
  const EventRecord ev = sim.step();
  ASSERT_EQ(ev.kind, EventRecord::Kind::Departure);
  EXPECT_EQ(ev.from, bar_of(model, {2}));
  EXPECT_EQ(ev.to, bar_of(model, {1}));
  EXPECT_EQ(sim.state().x[bar_of(model, {2})], 2);
  EXPECT_EQ(sim.state().x[bar_of(model, {1})], 1);
  EXPECT_EQ(sim.state().y[0], 5);
  EXPECT_GT(ev.elapsed, 0.0);
}

TEST(Simulator, EmptyFiniteSystemOnlyHasArrivals) {
  const auto model = test::single_type_model(1, 5, 1, "[pools]\nh = 10\n");
  Simulator sim(model, Policy::GrandF, 1.0, 2);
  EXPECT_DOUBLE_EQ(sim.total_rate(), 5.0);
  EXPECT_EQ(sim.step().kind, EventRecord::Kind::Arrival);
}

TEST(GrandAZ, EmptySystemFallsBack) {
  const auto model = parse_model(R"(
[types]
count = 1
[servers]
count = 2
[configs]
s1 = (1) (2)
s2 = (1)
[rates]
lambda = 1
mu = 1
[grand]
a = 0.5 0.5
)");
  Simulator sim(model, Policy::GrandAZ, 1.0, 1);
  EXPECT_EQ(sim.available(0), 0);
  const Assignment a = sim.place_grand_az(0, 0.3);
  EXPECT_TRUE(a.fallback);
  EXPECT_EQ(a.from, model.configs().zero(0));
  EXPECT_EQ(a.to, bar_of(model, {1}, 0));
}

// Two types so that Z = 3 with one (1 0) server: the zero-server count
// ceil(0.5 * 3) = 2 plus the (1 0) server give X_(1) = 3.
PackingModel two_thirds_model() {
  return parse_model(R"(
[types]
count = 2
[servers]
count = 1
[configs]
s1 = (1 0) (2 0) (0 1) (0 2)
[rates]
lambda = 1 1
mu = 1 1
[grand]
a = 0.5
)");
}

TEST(GrandAZ, UniformOverAvailableServers) {
  const auto model = two_thirds_model();
  Simulator sim(model, Policy::GrandAZ, 1.0, 1);
  std::vector<std::int64_t> counts(model.configs().size(), 0);
  counts[model.configs().position(bar_of(model, {1, 0}))] = 1;
  counts[model.configs().position(bar_of(model, {0, 2}))] = 1;
  sim.set_state(SystemState::from_counts(model.configs(), counts));
  ASSERT_EQ(sim.state().z, 3);
  EXPECT_EQ(sim.zero_servers(0), 2);
  EXPECT_EQ(sim.available(0), 3);
  EXPECT_EQ(sim.place_grand_az(0, 0.66).from, model.configs().zero(0));
  EXPECT_EQ(sim.place_grand_az(0, 0.67).from, bar_of(model, {1, 0}));
  EXPECT_EQ(sim.place_grand_az(0, 0.67).to, bar_of(model, {2, 0}));
  EXPECT_FALSE(sim.place_grand_az(0, 0.0).fallback);
}

TEST(GrandAZ, SelectionFrequencies) {
  const auto model = two_thirds_model();
  Simulator sim(model, Policy::GrandAZ, 1.0, 1);
  std::vector<std::int64_t> counts(model.configs().size(), 0);
  counts[model.configs().position(bar_of(model, {1, 0}))] = 3;
  counts[model.configs().position(bar_of(model, {0, 1}))] = 2;
  counts[model.configs().position(bar_of(model, {0, 2}))] = 1;
  sim.set_state(SystemState::from_counts(model.configs(), counts));
  // Z = 7: 4 zero servers, 3 (1 0) servers accept type 1; 4 zero, 2 (0 1) accept type 2.
  ASSERT_EQ(sim.available(0), 7);
  ASSERT_EQ(sim.available(1), 6);
  StreamRng rng(99, Stream::Placement);
  const int n = 100000;
  for (int type = 0; type < 2; ++type) {
    std::map<std::size_t, int> hits;
    for (int j = 0; j < n; ++j) ++hits[sim.place_grand_az(type, rng.next_uniform()).from];
    const double total = static_cast<double>(sim.available(type));
    for (const auto& [from, count] : hits) {
      const double mass = model.configs().is_zero(from)
                              ? static_cast<double>(sim.zero_servers(0))
                              : static_cast<double>(sim.state().x[from]);
      const double p = mass / total;
      EXPECT_NEAR(count, n * p, 3.0 * std::sqrt(n * p * (1 - p))) << type << " " << from;
    }
    EXPECT_EQ(hits.size(), 2u);
  }
}

TEST(GrandZp, ZeroServerCount) {
  const auto model = test::single_type_model(2, 1, 1, "[grand]\np = 0.9\n");
  Simulator sim(model, Policy::GrandZp, 1.0, 1);
  sim.set_state(SystemState::from_counts(model.configs(), {0, 50}));
  EXPECT_EQ(sim.zero_servers(0), 64);
  sim.set_state(SystemState::from_counts(model.configs(), {1, 0}));
  EXPECT_EQ(sim.zero_servers(0), 1);
  sim.set_state(SystemState::empty(model.configs()));
  EXPECT_EQ(sim.zero_servers(0), 0);
  EXPECT_TRUE(sim.place_grand_zp(0, 0.5).fallback);
}

TEST(GrandZp, ExponentDependsOnWeight) {
  const auto model = parse_model(R"(
[types]
count = 1
[servers]
count = 2
[configs]
s1 = (1)
s2 = (1)
[rates]
lambda = 1
mu = 1
[weights]
gamma = 1 3
[grand]
p = 0.5
)");
  Simulator sim(model, Policy::GrandZp, 1.0, 1);
  std::vector<std::int64_t> counts{64, 0};
  sim.set_state(SystemState::from_counts(model.configs(), counts));
  EXPECT_EQ(sim.zero_servers(0), 8);  // 64^0.5
  EXPECT_EQ(sim.zero_servers(1), 1);  // 64^-0.5 rounded up
}

TEST(GrandF, PlacementAndBlocking) {
  const auto model = test::single_type_model(1, 1, 1, "[pools]\nh = 2\n");
  Simulator sim(model, Policy::GrandF, 1.0, 1);
  ASSERT_EQ(sim.pools()[0], 2);
  sim.set_state(SystemState::from_counts(model.configs(), {1}));
  EXPECT_EQ(sim.available(0), 1);
  for (double u : {0.0, 0.5, 0.999}) {
    const Assignment a = sim.place_grand_f(0, u);
    EXPECT_FALSE(a.blocked);
    EXPECT_EQ(a.from, model.configs().zero(0));
  }
  sim.set_state(SystemState::from_counts(model.configs(), {2}));
  EXPECT_TRUE(sim.place_grand_f(0, 0.5).blocked);
  EXPECT_THROW(sim.set_state(SystemState::from_counts(model.configs(), {3})), Error);
}

TEST(GrandF, PackedServersBlockIncompatibleType) {
  const auto model = parse_model(std::string(test::kCap3) + "[pools]\nh = 0.02\n");
  Simulator sim(model, Policy::GrandF, 100.0, 1);
  ASSERT_EQ(sim.pools()[0], 2);
  std::vector<std::int64_t> counts(model.configs().size(), 0);
  counts[model.configs().position(bar_of(model, {1, 1}))] = 2;
  sim.set_state(SystemState::from_counts(model.configs(), counts));
  EXPECT_TRUE(sim.place_grand_f(0, 0.1).blocked);
  EXPECT_TRUE(sim.place_grand_f(1, 0.1).blocked);
}

TEST(GrandF, PoolRoundingWarns) {
  const auto model = test::single_type_model(1, 1, 1, "[pools]\nh = 2.5\n");
  RunOptions opt;
  opt.policy = Policy::GrandF;
  opt.r = 1.0;
  opt.horizon = 50.0;
  const auto stats = run(model, opt);
  EXPECT_FALSE(stats.warnings.empty());
  EXPECT_EQ(stats.pools[0], 3);
}

TEST(Simulator, PolicyMismatchIsRejected) {
  const auto model = test::single_type_model(1, 1, 1, "[grand]\na = 1\n");
  Simulator sim(model, Policy::GrandAZ, 1.0, 1);
  EXPECT_THROW(sim.place_grand_f(0, 0.5), Error);
  EXPECT_THROW(Simulator(model, Policy::GrandF, 1.0, 1), Error);
  EXPECT_THROW(Simulator(model, Policy::GrandZp, 1.0, 1), Error);
}

RunOptions options(Policy policy, double r, double horizon, std::uint64_t seed) {
  RunOptions opt;
  opt.policy = policy;
  opt.r = r;
  opt.horizon = horizon;
  opt.seed = seed;
  opt.check_every = 1;
  return opt;
}

TEST(Run, InvariantsAndFlowBalance) {
  const auto model = parse_model(test::kCap3);
  for (Policy policy : {Policy::GrandAZ, Policy::GrandF}) {
    const auto m = policy == Policy::GrandF
                       ? parse_model(std::string(test::kCap3) + "[pools]\nh = 0.7\n")
                       : model;
    const auto stats = run(m, options(policy, 20.0, 200.0, 3));
    const auto& set = m.configs();
    std::vector<std::int64_t> net(set.size_bar(), 0);
    for (std::size_t e = 0; e < set.edges().size(); ++e) {
      const auto d = stats.edge_arrivals[e] - stats.edge_departures[e];
      net[set.edges()[e].config] += d;
      net[set.edges()[e].source] -= d;
    }
    for (std::size_t p = 0; p < set.size(); ++p) {
      EXPECT_EQ(stats.final_counts[p] - stats.initial_counts[p], net[set.nonzero()[p]]);
    }
    for (std::size_t i = 0; i < 2; ++i) {
      std::int64_t accepted = 0;
      for (std::size_t e : set.edges_of_type(static_cast<int>(i))) accepted += stats.edge_arrivals[e];
      EXPECT_GE(accepted, 0);
      EXPECT_LE(stats.window_blocked[i], stats.window_arrivals[i]);
      if (policy == Policy::GrandAZ) EXPECT_EQ(stats.window_blocked[i], 0);
    }
  }
}

TEST(Run, Deterministic) {
  const auto model = parse_model(test::kCap3);
  const auto a = run(model, options(Policy::GrandAZ, 30.0, 100.0, 9));
  const auto b = run(model, options(Policy::GrandAZ, 30.0, 100.0, 9));
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.x_mean, b.x_mean);
  EXPECT_EQ(a.x_stderr, b.x_stderr);
  EXPECT_EQ(a.edge_arrivals, b.edge_arrivals);
  EXPECT_EQ(a.final_counts, b.final_counts);
  const auto c = run(model, options(Policy::GrandAZ, 30.0, 100.0, 10));
  EXPECT_NE(a.x_mean, c.x_mean);
}

TEST(Run, CustomerCountsCoupledAcrossPlacement) {
  auto def = parse_model_definition(test::kCap3);
  const PackingModel low(def);
  def.a = std::vector<double>{0.9};
  const PackingModel high(def);
  const auto a = run(low, options(Policy::GrandAZ, 30.0, 200.0, 5));
  const auto b = run(high, options(Policy::GrandAZ, 30.0, 200.0, 5));
  EXPECT_EQ(a.events, b.events);
  EXPECT_EQ(a.y_count_mean, b.y_count_mean);
  EXPECT_EQ(a.y_count_var, b.y_count_var);
  EXPECT_NE(a.x_mean, b.x_mean);
}

TEST(Run, FiniteCountsBelowPoisson) {
  const auto model = parse_model(std::string(test::kCap3) + "[pools]\nh = 0.5\n");
  const auto stats = run(model, options(Policy::GrandF, 40.0, 500.0, 2));
  for (std::size_t i = 0; i < 2; ++i) {
    EXPECT_LE(stats.y_mean[i], model.rho()[i] + 3.0 * stats.y_stderr[i]);
  }
}

TEST(Run, ErlangBlockingAndPullRate) {
  const auto model = test::single_type_model(1, 5, 1, "[pools]\nh = 10\n");
  RunOptions opt = options(Policy::GrandF, 1.0, 50000.0, 1);
  opt.check_every = 0;
  const auto stats = run(model, opt);
  const double b = oracle::erlang_b(10, 5.0);
  EXPECT_NEAR(b, 0.0183846, 1e-6);
  EXPECT_NEAR(stats.blocking[0], b, 4.0 * stats.blocking_stderr[0]);
  EXPECT_NEAR(stats.pull_rate, 2.0, 0.01);
}

TEST(Run, StderrShrinksWithHorizon) {
  const auto model = parse_model(test::kCap3);
  RunOptions opt = options(Policy::GrandAZ, 20.0, 4000.0, 1);
  opt.check_every = 0;
  double ratio_sum = 0.0;
  const int seeds = 6;
  for (int s = 1; s <= seeds; ++s) {
    opt.seed = static_cast<std::uint64_t>(s);
    opt.horizon = 4000.0;
    const double short_se = run(model, opt).z_stderr + run(model, opt).y_stderr[1];
    opt.horizon = 8000.0;
    const double long_se = run(model, opt).z_stderr + run(model, opt).y_stderr[1];
    ratio_sum += long_se / short_se;
  }
  EXPECT_NEAR(ratio_sum / seeds, 1.0 / std::sqrt(2.0), 0.2);
}

TEST(Run, OptionValidation) {
  const auto model = parse_model(test::kCap3);
  RunOptions opt = options(Policy::GrandAZ, 10.0, 100.0, 1);
  opt.batches = 1;
  EXPECT_THROW(run(model, opt), Error);
  opt = options(Policy::GrandAZ, 10.0, 100.0, 1);
  opt.warmup = 100.0;
  EXPECT_THROW(run(model, opt), Error);
  opt = options(Policy::GrandAZ, -1.0, 100.0, 1);
  EXPECT_THROW(run(model, opt), Error);
}

TEST(Run, InsufficientData) {
  const auto model = test::single_type_model(1, 1, 1, "[grand]\na = 1\n");
  RunOptions opt = options(Policy::GrandAZ, 1e-6, 1.0, 1);
  opt.batches = 20;
  try {
    run(model, opt);
    FAIL() << "expected InsufficientData";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InsufficientData);
  }
}

TEST(Run, PoissonMarginalsAtModerateScale) {
  const auto model = parse_model(test::kCap3);
  RunOptions opt = options(Policy::GrandAZ, 50.0, 2000.0, 1);
  opt.check_every = 0;
  const auto stats = run(model, opt);
  for (std::size_t i = 0; i < 2; ++i) {
    const double mean = model.rho()[i] * 50.0;
    EXPECT_NEAR(stats.y_count_mean[i], mean, 3.0 * stats.y_stderr[i] * 50.0);
    EXPECT_NEAR(stats.y_count_var[i] / mean, 1.0, 0.15);
  }
  double mass = 0.0;
  for (std::size_t p = 0; p < model.configs().size(); ++p) {
    mass += model.configs().config(model.configs().nonzero()[p]).total() * stats.x_mean[p];
  }
  EXPECT_NEAR(mass, 1.0, 3.0 * stats.z_stderr);
}

}  // namespace
}  // namespace grand
