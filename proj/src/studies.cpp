#include "grand/studies.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include "grand/error.hpp"

namespace grand {

void ExperimentPlan::validate() const {
  if (r_values.empty()) fail(ErrorCode::InvalidArgument, "plan needs at least one r value");
  for (std::size_t j = 0; j < r_values.size(); ++j) {
    if (!(r_values[j] > 0.0)) fail(ErrorCode::InvalidArgument, "r values must be positive");
    if (j > 0 && !(r_values[j] > r_values[j - 1])) {
      fail(ErrorCode::InvalidArgument, "r values must be strictly increasing");
    }
  }
  if (seeds.empty()) fail(ErrorCode::InvalidArgument, "plan needs at least one seed");
  if (!(horizon > 0.0)) fail(ErrorCode::InvalidArgument, "horizon must be positive");
  if (warmup && !(*warmup >= 0.0 && *warmup < horizon)) {
    fail(ErrorCode::InvalidArgument, "warmup must lie in [0, horizon)");
  }
  if (batches < 2) fail(ErrorCode::InvalidArgument, "at least two batches are required");
}

std::vector<std::vector<RunStatistics>> run_grid(const PackingModel& model,
                                                 const ExperimentPlan& plan, Policy policy) {
  plan.validate();
  const std::size_t nr = plan.r_values.size();
  const std::size_t ns = plan.seeds.size();
  std::vector<std::vector<RunStatistics>> out(nr, std::vector<RunStatistics>(ns));
  std::vector<std::exception_ptr> errors(nr * ns);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < nr * ns;) {
      const std::size_t ri = job / ns;
      const std::size_t si = job % ns;
      RunOptions opts;
      opts.policy = policy;
      opts.r = plan.r_values[ri];
      opts.horizon = plan.horizon;
      opts.warmup = plan.warmup;
      opts.batches = plan.batches;
      opts.seed = plan.seeds[si];
      try {
        out[ri][si] = run(model, opts);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  const auto workers = std::min<std::size_t>(nr * ns, static_cast<std::size_t>(std::max(1, plan.threads)));
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return out;
}

SeedSummary summarize(const std::vector<double>& values) {
  SeedSummary s;
  if (values.empty()) return s;
  double sum = 0.0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    const double var = ss / static_cast<double>(values.size() - 1);
    s.stderr_ = std::sqrt(var / static_cast<double>(values.size()));
  }
  return s;
}

double euclidean_distance(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail(ErrorCode::InvalidArgument, "distance between vectors of different length");
  double ss = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) ss += (a[j] - b[j]) * (a[j] - b[j]);
  return std::sqrt(ss);
}

namespace {

void plan_comments(CsvTable& t, const ExperimentPlan& plan, const char* policy) {
  std::ostringstream os;
  os << "model=" << plan.model_file << " policy=" << policy << " horizon=" << format_double(plan.horizon)
     << " warmup=" << (plan.warmup ? format_double(*plan.warmup) : std::string("default"))
     << " batches=" << plan.batches << " seeds=";
  for (std::size_t j = 0; j < plan.seeds.size(); ++j) os << (j ? " " : "") << plan.seeds[j];
  t.comment(os.str());
}

void trend_warning(std::vector<std::string>& warnings, const std::string& what,
                   const std::vector<double>& r, const std::vector<double>& values) {
  for (std::size_t j = 1; j < values.size(); ++j) {
    if (!(values[j] < values[j - 1]) && !(values[j] == 0.0 && values[j - 1] == 0.0)) {
      std::ostringstream os;
      os << what << " does not decrease from r=" << format_double(r[j - 1])
         << " to r=" << format_double(r[j]) << " (" << format_double(values[j - 1]) << " -> "
         << format_double(values[j]) << ")";
      warnings.push_back(os.str());
    }
  }
}

double max_residual(const PackingModel& model, const std::vector<double>& y) {
  double res = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) res = std::max(res, std::abs(y[i] - model.rho()[i]));
  return res;
}

}  // namespace

Theorem1Study run_theorem1_study(const PackingModel& model, const ExperimentPlan& plan) {
  Theorem1Study study;
  study.target = solve_product_form_infinite(model);
  const auto grid = run_grid(model, plan, Policy::GrandAZ);
  std::vector<double> means;
  for (std::size_t ri = 0; ri < grid.size(); ++ri) {
    Theorem1Row row;
    row.r = plan.r_values[ri];
    std::vector<double> mass;
    for (const auto& st : grid[ri]) {
      row.distances.push_back(euclidean_distance(st.x_mean, study.target.x));
      double m = 0.0;
      for (double y : st.y_mean) m += y;
      mass.push_back(m);
      for (const auto& w : st.warnings) study.warnings.push_back(w);
    }
    row.distance = summarize(row.distances);
    row.mass = summarize(mass);
    means.push_back(row.distance.mean);
    study.rows.push_back(std::move(row));
  }
  trend_warning(study.warnings, "mean distance to the product-form point", plan.r_values, means);
  return study;
}

CsvTable theorem1_csv(const PackingModel& model, const ExperimentPlan& plan,
                      const Theorem1Study& study) {
  CsvTable t({"r", "distance", "stderr", "mass", "per_seed"});
  plan_comments(t, plan, "grand-az");
  t.comment("target x_star_a=" + join_doubles(study.target.x) + " nu=" + join_doubles(study.target.nu) +
            " a=" + join_doubles(model.a()));
  for (const auto& w : study.warnings) t.comment("warning: " + w);
  for (const auto& row : study.rows) {
    t.row({format_double(row.r), format_double(row.distance.mean), format_double(row.distance.stderr_),
           format_double(row.mass.mean), join_doubles(row.distances)});
  }
  return t;
}

Conjecture1Study run_conjecture1_study(const PackingModel& model, const ExperimentPlan& plan) {
  if (!model.p()) fail(ErrorCode::InvalidArgument, "conjecture-1 study needs p in [grand]");
  Conjecture1Study study;
  study.p = *model.p();
  study.lp = solve_lp(model);
  const auto grid = run_grid(model, plan, Policy::GrandZp);
  std::vector<double> means;
  for (std::size_t ri = 0; ri < grid.size(); ++ri) {
    Conjecture1Row row;
    row.r = plan.r_values[ri];
    std::vector<double> costs;
    for (const auto& st : grid[ri]) {
      const double cost = weighted_cost(model, st.x_mean);
      costs.push_back(cost);
      row.distances.push_back(cost - study.lp.value + max_residual(model, st.y_mean));
      for (const auto& w : st.warnings) study.warnings.push_back(w);
    }
    row.distance = summarize(row.distances);
    row.cost = summarize(costs);
    means.push_back(row.distance.mean);
    study.rows.push_back(std::move(row));
  }
  trend_warning(study.warnings, "mean distance to the LP optimal face", plan.r_values, means);
  return study;
}

CsvTable conjecture1_csv(const PackingModel& model, const ExperimentPlan& plan,
                         const Conjecture1Study& study) {
  (void)model;
  CsvTable t({"r", "distance", "stderr", "cost", "per_seed"});
  plan_comments(t, plan, "grand-zp");
  t.comment("target lp_value=" + format_double(study.lp.value) + " x_star=" + join_doubles(study.lp.x_star) +
            " p=" + format_double(study.p));
  for (const auto& w : study.warnings) t.comment("warning: " + w);
  for (const auto& row : study.rows) {
    t.row({format_double(row.r), format_double(row.distance.mean), format_double(row.distance.stderr_),
           format_double(row.cost.mean), join_doubles(row.distances)});
  }
  return t;
}

Conjecture2Study run_conjecture2_study(const PackingModel& model, const ExperimentPlan& plan) {
  if (!model.has_pools()) fail(ErrorCode::InvalidArgument, "conjecture-2 study needs pools h");
  const FeasibilityReport feas = check_feasibility(model);
  if (!feas.ok) fail(ErrorCode::Infeasible, "refusing to run: " + feas.explanation);
  Conjecture2Study study;
  study.target = solve_product_form_finite(model);
  const auto grid = run_grid(model, plan, Policy::GrandF);
  const std::size_t ni = static_cast<std::size_t>(model.num_types());
  std::vector<std::vector<double>> trend(ni);
  for (std::size_t ri = 0; ri < grid.size(); ++ri) {
    Conjecture2Row row;
    row.r = plan.r_values[ri];
    std::vector<std::vector<double>> blocking(ni);
    std::vector<double> pulls, distances;
    for (const auto& st : grid[ri]) {
      for (std::size_t i = 0; i < ni; ++i) blocking[i].push_back(st.blocking[i]);
      pulls.push_back(st.pull_rate);
      distances.push_back(euclidean_distance(st.x_mean, study.target.x));
      for (const auto& w : st.warnings) study.warnings.push_back(w);
    }
    for (std::size_t i = 0; i < ni; ++i) {
      row.blocking.push_back(summarize(blocking[i]));
      trend[i].push_back(row.blocking.back().mean);
    }
    row.pull_rate = summarize(pulls);
    row.distance = summarize(distances);
    study.rows.push_back(std::move(row));
  }
  for (std::size_t i = 0; i < ni; ++i) {
    trend_warning(study.warnings, "blocking of type " + model.type_names()[i], plan.r_values, trend[i]);
  }
  return study;
}

CsvTable conjecture2_csv(const PackingModel& model, const ExperimentPlan& plan,
                         const Conjecture2Study& study) {
  std::vector<std::string> header{"r"};
  for (const auto& n : model.type_names()) {
    header.push_back("blocking:" + n);
    header.push_back("blocking_stderr:" + n);
  }
  header.insert(header.end(), {"pull_rate", "pull_rate_stderr", "distance", "distance_stderr"});
  CsvTable t(header);
  plan_comments(t, plan, "grand-f");
  t.comment("target x_star_box=" + join_doubles(study.target.xbar) + " nu=" + join_doubles(study.target.nu) +
            " beta=" + join_doubles(study.target.beta));
  for (const auto& w : study.warnings) t.comment("warning: " + w);
  for (const auto& row : study.rows) {
    std::vector<std::string> cells{format_double(row.r)};
    for (const auto& b : row.blocking) {
      cells.push_back(format_double(b.mean));
      cells.push_back(format_double(b.stderr_));
    }
    cells.push_back(format_double(row.pull_rate.mean));
    cells.push_back(format_double(row.pull_rate.stderr_));
    cells.push_back(format_double(row.distance.mean));
    cells.push_back(format_double(row.distance.stderr_));
    t.row(std::move(cells));
  }
  return t;
}

}  // namespace grand
