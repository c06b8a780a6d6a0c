#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

#include "grand/acceptance.hpp"
#include "grand/error.hpp"
#include "grand/model.hpp"
#include "grand/model_io.hpp"
#include "grand/optimize.hpp"
#include "support.hpp"

namespace grand {
namespace {

Configuration cfg(int s, std::vector<int> counts) { return {s, std::move(counts)}; }

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no grand::Error thrown";
  return ErrorCode::InvalidArgument;
}

TEST(ValidateMonotone, SingleSlotIsDownwardClosed) {
  EXPECT_TRUE(validate_monotone(1, 1, {cfg(0, {1})}).ok());
}

TEST(ValidateMonotone, ReportsMissingPredecessor) {
  const auto report = validate_monotone(1, 1, {cfg(0, {2})});
  ASSERT_FALSE(report.ok());
  ASSERT_EQ(report.violations.size(), 1u);
  EXPECT_EQ(report.violations[0].missing, cfg(0, {1}));
  EXPECT_EQ(report.violations[0].config, cfg(0, {2}));
}

TEST(ValidateMonotone, UnitSquareIsClosed) {
  EXPECT_TRUE(validate_monotone(2, 1, {cfg(0, {1, 0}), cfg(0, {0, 1}), cfg(0, {1, 1})}).ok());
}

TEST(ValidateMonotone, ReportsEveryMissingPredecessor) {
  const auto report = validate_monotone(2, 1, {cfg(0, {1, 1})});
  EXPECT_EQ(report.violations.size(), 2u);
}

TEST(ValidateMonotone, ReportsUnservableType) {
  const auto report = validate_monotone(2, 1, {cfg(0, {1, 0})});
  ASSERT_EQ(report.unservable_types.size(), 1u);
  EXPECT_EQ(report.unservable_types[0], 1);
}

TEST(ConfigurationSet, RejectsInvalidFamily) {
  EXPECT_EQ(code_of([] { ConfigurationSet(1, 1, {cfg(0, {2})}); }), ErrorCode::Model);
}

TEST(VectorPacking, CapacityTwoSingleResource) {
  const auto set = generate_vector_packing({{2}}, {{1}});
  ASSERT_EQ(set.size_bar(), 3u);
  EXPECT_EQ(set.config(0), cfg(0, {0}));
  EXPECT_EQ(set.config(1), cfg(0, {1}));
  EXPECT_EQ(set.config(2), cfg(0, {2}));
}

TEST(VectorPacking, CapacityThreeTwoTypes) {
  const auto set = generate_vector_packing({{3}}, {{2}, {1}});
  std::vector<Configuration> got(set.all().begin(), set.all().end());
  const std::vector<Configuration> expected{cfg(0, {0, 0}), cfg(0, {0, 1}), cfg(0, {0, 2}),
                                            cfg(0, {0, 3}), cfg(0, {1, 0}), cfg(0, {1, 1})};
  EXPECT_EQ(got, expected);
  std::vector<Configuration> nonzero;
  for (std::size_t bar : set.nonzero()) nonzero.push_back(set.config(bar));
  EXPECT_TRUE(validate_monotone(2, 1, nonzero).ok());
}

TEST(VectorPacking, ZeroRequirementIsUnbounded) {
  EXPECT_EQ(code_of([] { generate_vector_packing({{2}}, {{0}}); }), ErrorCode::UnboundedSet);
}

TEST(VectorPacking, CapIsEnforced) {
  EXPECT_EQ(code_of([] { generate_vector_packing({{50, 50}}, {{1, 0}, {0, 1}}, 100); }),
            ErrorCode::UnboundedSet);
}

TEST(Edges, SingleTypeTwoSlots) {
  const ConfigurationSet set(1, 1, {cfg(0, {1}), cfg(0, {2})});
  const auto edges = build_edges(set);
  ASSERT_EQ(edges.size(), 2u);
  EXPECT_EQ(set.config(edges[0].config), cfg(0, {1}));
  EXPECT_EQ(set.config(edges[0].source), cfg(0, {0}));
  EXPECT_EQ(set.config(edges[1].config), cfg(0, {2}));
  EXPECT_EQ(set.config(edges[1].source), cfg(0, {1}));
}

TEST(Edges, UnitSquareHasFourEdges) {
  const ConfigurationSet set(2, 1, {cfg(0, {1, 0}), cfg(0, {0, 1}), cfg(0, {1, 1})});
  EXPECT_EQ(build_edges(set).size(), 4u);
}

TEST(Edges, CountMatchesOccupiedTypes) {
  const auto set = generate_vector_packing({{3}, {5}}, {{2}, {1}});
  std::size_t expected = 0;
  for (std::size_t bar : set.nonzero()) {
    for (int i = 0; i < set.num_types(); ++i) expected += set.count(bar, i) >= 1 ? 1 : 0;
  }
  EXPECT_EQ(set.edges().size(), expected);
  for (const Edge& e : set.edges()) {
    EXPECT_EQ(set.down(e.config, e.type), e.source);
    EXPECT_EQ(set.up(e.source, e.type), e.config);
  }
}

TEST(Edges, FactorialProduct) {
  const auto set = generate_vector_packing({{3}}, {{2}, {1}});
  EXPECT_DOUBLE_EQ(set.factorial_product(set.find(cfg(0, {0, 3}))), 6.0);
  EXPECT_DOUBLE_EQ(set.factorial_product(set.find(cfg(0, {1, 1}))), 1.0);
}

TEST(Normalization, SumRhoAndGamma) {
  const auto model = parse_model(R"(
[types]
count = 2
[servers]
count = 2
[configs]
s1 = (1 0) (0 1)
s2 = (1 0) (0 1) (1 1)
[rates]
lambda = 3 1
mu = 2 0.5
[weights]
gamma = 2 5
)");
  const double sum = std::accumulate(model.rho().begin(), model.rho().end(), 0.0);
  EXPECT_NEAR(sum, 1.0, 1e-12);
  EXPECT_EQ(model.gamma()[0], 1.0);
  EXPECT_DOUBLE_EQ(model.gamma()[1], 2.5);
  EXPECT_DOUBLE_EQ(model.rate_scale(), 3.5);
  EXPECT_DOUBLE_EQ(model.effective_r(2.0) * model.lambda()[0], 2.0 * 3.0);
}

TEST(Normalization, Idempotent) {
  const auto once = parse_model(test::kCap3 + std::string("[weights]\ngamma = 4\n"));
  const PackingModel twice(once.normalized_definition());
  EXPECT_EQ(twice.rho(), once.rho());
  EXPECT_EQ(twice.lambda(), once.lambda());
  EXPECT_EQ(twice.gamma(), once.gamma());
  EXPECT_EQ(twice.a(), once.a());
  EXPECT_DOUBLE_EQ(twice.rate_scale(), 1.0);
}

TEST(Normalization, DoubledArrivalsGiveSameEquilibrium) {
  const auto base = parse_model(test::kCap3);
  auto def = parse_model_definition(test::kCap3);
  for (double& l : def.lambda) l *= 2.0;
  const PackingModel doubled(std::move(def));
  EXPECT_DOUBLE_EQ(doubled.effective_r(50.0), 2.0 * base.effective_r(50.0));
  const auto x1 = solve_product_form_infinite(base).x;
  const auto x2 = solve_product_form_infinite(doubled).x;
  ASSERT_EQ(x1.size(), x2.size());
  for (std::size_t k = 0; k < x1.size(); ++k) EXPECT_NEAR(x1[k], x2[k], 1e-12);
}

TEST(Normalization, PoolsScaleWithRate) {
  const auto model = test::single_type_model(1, 5, 1, "[pools]\nh = 10\n");
  EXPECT_DOUBLE_EQ(model.h()[0], 2.0);
  EXPECT_DOUBLE_EQ(model.effective_r(1.0), 5.0);
}

TEST(Normalization, AlphaSetsA) {
  const auto model = parse_model(R"(
[types]
count = 1
[servers]
count = 2
[configs]
s1 = (1)
s2 = (1) (2)
[rates]
lambda = 1
mu = 1
[weights]
gamma = 1 2
[grand]
alpha = 0.1
)");
  EXPECT_DOUBLE_EQ(model.a()[0], 0.1);
  EXPECT_NEAR(model.a()[1], 0.01, 1e-15);
}

TEST(Parser, VectorPackingMatchesExplicitList) {
  const auto generated = parse_model(test::kCap3);
  const auto listed = parse_model(R"(
[types]
names = big small
[servers]
names = host
[configs]
host = (1 0) (0 1) (1 1) (0 2) (0 3)
[rates]
lambda = 0.5 0.5
mu = 1 1
)");
  ASSERT_EQ(generated.configs().size_bar(), listed.configs().size_bar());
  for (std::size_t bar = 0; bar < listed.configs().size_bar(); ++bar) {
    EXPECT_EQ(generated.configs().config(bar), listed.configs().config(bar));
  }
  EXPECT_EQ(generated.label(generated.configs().find(cfg(0, {1, 1}))), "host(1 1)");
}

TEST(Parser, Errors) {
  EXPECT_EQ(code_of([] { parse_model("[bogus]\nx = 1\n"); }), ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_model(test::single_type(1, 1, 1, "") + "[rates]\nlambda = x\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { parse_model("[types]\ncount = 1\n[servers]\ncount = 1\n[rates]\nlambda = 1\nmu = 1\n"); }),
            ErrorCode::Parse);
  EXPECT_EQ(code_of([] { test::single_type_model(1, -1, 1, ""); }), ErrorCode::Model);
  EXPECT_EQ(code_of([] { test::single_type_model(1, 1, 1, "[grand]\np = 1.5\n"); }),
            ErrorCode::Model);
  EXPECT_EQ(code_of([] { load_model("/nonexistent/model.file"); }), ErrorCode::Io);
}

TEST(Parser, NonMonotoneListIsAModelError) {
  EXPECT_EQ(code_of([] {
              parse_model("[types]\ncount = 1\n[servers]\ncount = 1\n[configs]\ns1 = (2)\n"
                          "[rates]\nlambda = 1\nmu = 1\n");
            }),
            ErrorCode::Model);
}

TEST(BundledModels, MatchEmbeddedText) {
  const std::filesystem::path dir = GRAND_SOURCE_DIR "/models";
  for (const auto& name : acceptance_model_names()) {
    std::ifstream in(dir / (name + ".model"));
    ASSERT_TRUE(in) << name;
    std::stringstream ss;
    ss << in.rdbuf();
    EXPECT_EQ(ss.str(), acceptance_model_text(name)) << name;
    EXPECT_NO_THROW(load_model(dir / (name + ".model"))) << name;
  }
  EXPECT_EQ(acceptance_model_names().size(), 6u);
}

TEST(BundledModels, SummaryMentionsConfigurations) {
  const std::string summary = model_summary(acceptance_model("cap3"));
  EXPECT_NE(summary.find("host: (0 1) (0 2) (0 3) (1 0) (1 1)"), std::string::npos) << summary;
}

}  // namespace
}  // namespace grand
