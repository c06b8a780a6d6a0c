#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "grand/csv.hpp"
#include "grand/model.hpp"
#include "grand/optimize.hpp"
#include "grand/simulator.hpp"

namespace grand {

struct ExperimentPlan {
  std::string model_file;  // recorded in CSV headers only
  std::vector<double> r_values{50, 100, 200};
  double horizon = 2000.0;
  std::optional<double> warmup;
  int batches = 20;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  int threads = 1;

  // r strictly increasing and positive, at least one seed, horizon > warmup.
  void validate() const;
};

// One simulation per (r, seed), executed on `threads` workers and returned
// indexed [r][seed] regardless of completion order.
std::vector<std::vector<RunStatistics>> run_grid(const PackingModel& model,
                                                 const ExperimentPlan& plan, Policy policy);

struct SeedSummary {
  double mean = 0.0;
  double stderr_ = 0.0;  // across seeds; 0 with a single seed
};
SeedSummary summarize(const std::vector<double>& values);

struct Theorem1Row {
  double r = 0.0;
  std::vector<double> distances;  // per seed
  SeedSummary distance;
  SeedSummary mass;               // sum_i y_i, should be close to 1
};

struct Theorem1Study {
  ProductFormSolution target;
  std::vector<Theorem1Row> rows;
  std::vector<std::string> warnings;
};

// GRAND(aZ); Euclidean distance of the time-averaged state to x^{*,a}.
Theorem1Study run_theorem1_study(const PackingModel& model, const ExperimentPlan& plan);
CsvTable theorem1_csv(const PackingModel& model, const ExperimentPlan& plan,
                      const Theorem1Study& study);

struct Conjecture1Row {
  double r = 0.0;
  std::vector<double> distances;  // (cost - LP value) + max_i |y_i - rho_i|, per seed
  SeedSummary distance;
  SeedSummary cost;
};

struct Conjecture1Study {
  LpSolution lp;
  double p = 0.0;
  std::vector<Conjecture1Row> rows;
  std::vector<std::string> warnings;  // non-monotone trends
};

// GRAND(Z^p) with the model's p.
Conjecture1Study run_conjecture1_study(const PackingModel& model, const ExperimentPlan& plan);
CsvTable conjecture1_csv(const PackingModel& model, const ExperimentPlan& plan,
                         const Conjecture1Study& study);

struct Conjecture2Row {
  double r = 0.0;
  std::vector<SeedSummary> blocking;  // per type, across seeds
  SeedSummary pull_rate;
  SeedSummary distance;               // to x^{*,box} over K
};

struct Conjecture2Study {
  ProductFormSolution target;
  std::vector<Conjecture2Row> rows;
  std::vector<std::string> warnings;
};

// GRAND-F; refuses with Error(Infeasible) when the pools cannot leave idle capacity.
Conjecture2Study run_conjecture2_study(const PackingModel& model, const ExperimentPlan& plan);
CsvTable conjecture2_csv(const PackingModel& model, const ExperimentPlan& plan,
                         const Conjecture2Study& study);

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace grand
