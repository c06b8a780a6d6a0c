#include "grand/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <mutex>
#include <sstream>

#include <json.hpp>

#include "grand/csv.hpp"
#include "grand/fluid.hpp"
#include "grand/model_io.hpp"
#include "grand/optimize.hpp"
#include "grand/oracle.hpp"
#include "grand/simulator.hpp"
#include "grand/studies.hpp"

namespace grand {

PackingModel acceptance_model(std::string_view name) {
  return parse_model(acceptance_model_text(name), std::string(name) + ".model");
}

bool AcceptanceReport::passed() const {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

std::string AcceptanceReport::text() const {
  std::ostringstream os;
  for (const auto& r : results) {
    os << (r.passed ? "PASS" : "FAIL") << "  [" << r.id << "] " << r.name << ": " << r.detail
       << " (" << std::fixed;
    os.precision(2);
    os << r.seconds << " s)\n";
    os.unsetf(std::ios::floatfield);
    for (const auto& w : r.warnings) os << "      warning: " << w << '\n';
  }
  std::size_t failed = 0;
  for (const auto& r : results) failed += r.passed ? 0 : 1;
  os << (failed == 0 ? "all " : "") << results.size() - failed << "/" << results.size()
     << " criteria passed\n";
  return os.str();
}

std::string AcceptanceReport::json() const {
  nlohmann::json j;
  j["passed"] = passed();
  j["criteria"] = nlohmann::json::array();
  for (const auto& r : results) {
    j["criteria"].push_back({{"id", r.id},
                             {"name", r.name},
                             {"passed", r.passed},
                             {"detail", r.detail},
                             {"warnings", r.warnings},
                             {"seconds", r.seconds}});
  }
  return j.dump(2);
}

namespace {

using Clock = std::chrono::steady_clock;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Builds a result while measuring wall time; `check` fills passed/detail.
CriterionResult timed(int id, std::string name, double limit_seconds,
                      const std::function<void(CriterionResult&)>& check) {
  CriterionResult r;
  r.id = id;
  r.name = std::move(name);
  const auto start = Clock::now();
  try {
    check(r);
  } catch (const std::exception& e) {
    r.passed = false;
    r.detail = std::string("error: ") + e.what();
  }
  r.seconds = std::chrono::duration<double>(Clock::now() - start).count();
  if (limit_seconds > 0.0 && r.seconds >= limit_seconds) {
    r.passed = false;
    r.detail += "; exceeded runtime limit of " + fmt(limit_seconds) + " s";
  }
  return r;
}

bool strictly_decreasing(const std::vector<double>& v) {
  for (std::size_t j = 1; j < v.size(); ++j) {
    if (!(v[j] < v[j - 1])) return false;
  }
  return true;
}

std::string list(const std::vector<double>& v) {
  std::string out;
  for (std::size_t j = 0; j < v.size(); ++j) out += (j ? " " : "") + fmt(v[j]);
  return out;
}

// --- 1 -------------------------------------------------------------------

CriterionResult poisson() {
  return timed(1, "poisson marginals", 30.0, [](CriterionResult& r) {
    const PackingModel model = acceptance_model("cap3");
    RunOptions opts;
    opts.policy = Policy::GrandAZ;
    opts.r = 50;
    opts.horizon = 2000;
    opts.warmup = 400;
    opts.seed = 1;
    const RunStatistics st = run(model, opts);
    r.passed = true;
    std::ostringstream os;
    for (std::size_t i = 0; i < st.y_count_mean.size(); ++i) {
      const double target = model.rho()[i] * st.effective_r;
      const double se = st.y_stderr[i] * st.effective_r;
      const double z = (st.y_count_mean[i] - target) / se;
      const double dispersion = st.y_count_var[i] / st.y_count_mean[i];
      const bool ok = std::abs(z) <= 3.0 && dispersion >= 0.9 && dispersion <= 1.1;
      r.passed = r.passed && ok;
      os << (i ? "; " : "") << model.type_names()[i] << " mean " << fmt(st.y_count_mean[i])
         << " vs " << fmt(target) << " (z " << fmt(z) << "), var/mean " << fmt(dispersion);
    }
    r.detail = os.str();
  });
}

// --- 2 and 9 share one run --------------------------------------------------

const RunStatistics& erlang_run() {
  static std::once_flag once;
  static RunStatistics stats;
  std::call_once(once, [] {
    const PackingModel model = acceptance_model("erlang");
    RunOptions opts;
    opts.policy = Policy::GrandF;
    opts.r = 1;
    opts.horizon = 200000;
    opts.seed = 1;
    stats = run(model, opts);
  });
  return stats;
}

CriterionResult erlang() {
  return timed(2, "erlang-b blocking", 30.0, [](CriterionResult& r) {
    const RunStatistics& st = erlang_run();
    const double exact = oracle::erlang_b(10, 5.0);
    const double half = 1.96 * st.blocking_stderr[0];
    r.passed = st.pools[0] == 10 && std::abs(st.blocking[0] - exact) <= half;
    r.detail = "blocking " + fmt(st.blocking[0]) + " +- " + fmt(half) + " vs B(10,5) = " + fmt(exact);
  });
}

CriterionResult pull() {
  return timed(9, "pull-message rate", 0.0, [](CriterionResult& r) {
    const RunStatistics& st = erlang_run();
    r.passed = st.pull_rate >= 1.99 && st.pull_rate <= 2.01;
    r.detail = fmt(static_cast<double>(st.window_pull_messages)) + " messages for " +
               fmt(static_cast<double>(st.window_accepted)) + " accepted customers, rate " +
               fmt(st.pull_rate);
  });
}

// --- 3 ---------------------------------------------------------------------

CriterionResult theorem1(const AcceptanceOptions& options) {
  return timed(3, "convergence to the product-form point", 300.0, [&](CriterionResult& r) {
    const PackingModel model = acceptance_model("cap3");
    ExperimentPlan plan;
    plan.model_file = "cap3.model";
    plan.r_values = {50, 100, 200};
    plan.horizon = 2000;
    plan.seeds = {1, 2, 3, 4, 5};
    plan.threads = options.threads;
    const Theorem1Study study = run_theorem1_study(model, plan);
    std::vector<double> means;
    for (const auto& row : study.rows) means.push_back(row.distance.mean);
    r.passed = strictly_decreasing(means) && means.back() < 0.05;
    r.detail = "mean distances at r = 50 100 200: " + list(means);
    if (options.output_dir) theorem1_csv(model, plan, study).write(*options.output_dir / "study_t1.csv");
  });
}

// --- 4 ---------------------------------------------------------------------

CriterionResult theorem2(const AcceptanceOptions& options) {
  return timed(4, "alpha sweep towards the LP optimum", 5.0, [&](CriterionResult& r) {
    const PackingModel model = acceptance_model("twotier");
    const AlphaSweep sweep = alpha_sweep(model, {1e-1, 1e-2, 1e-3, 1e-4}, options.threads);
    std::vector<double> gaps, kkt;
    for (const auto& row : sweep.rows) {
      gaps.push_back(row.gap);
      kkt.push_back(row.kkt_residual);
    }
    r.passed = strictly_decreasing(gaps) && strictly_decreasing(kkt) && sweep.lp.kkt.ok();
    r.detail = "LP value " + fmt(sweep.lp.value) + "; gaps " + list(gaps) + "; KKT residuals " + list(kkt);
    if (options.output_dir) alpha_sweep_csv(model, sweep).write(*options.output_dir / "alpha_sweep.csv");
  });
}

// --- 5 ---------------------------------------------------------------------

double closed_form_error(const FluidSystem& system, const std::vector<double>& x0,
                         bool require_idle) {
  IntegrateOptions io;
  io.t_end = 10.0;
  io.dt = 1e-3;
  io.sample_every = 10;
  const Trajectory traj = integrate(system, x0, io);
  const PackingModel& model = system.model();
  const auto& y0 = traj.samples.front().y;
  double worst = 0.0;
  for (const auto& s : traj.samples) {
    if (require_idle) {
      const FluidState st = system.evaluate(s.x);
      for (int k = 0; k < model.num_server_types(); ++k) {
        if (!(st.xbar[model.configs().zero(k)] > 0.0)) {
          return std::numeric_limits<double>::infinity();
        }
      }
    }
    for (std::size_t i = 0; i < s.y.size(); ++i) {
      const double rho = model.rho()[i];
      const double exact = rho + (y0[i] - rho) * std::exp(-model.mu()[i] * s.t);
      worst = std::max(worst, std::abs(s.y[i] - exact));
    }
  }
  return worst;
}

CriterionResult fluid_exactness() {
  return timed(5, "fluid occupancy closed form", 0.0, [](CriterionResult& r) {
    const PackingModel inf = acceptance_model("cap3");
    const PackingModel fin = acceptance_model("cap3-finite");
    const FluidSystem si = FluidSystem::infinite(inf);
    const FluidSystem sf = FluidSystem::finite(fin);
    // Off-equilibrium starts: overloaded infinite system, underloaded pools.
    std::vector<double> xi = solve_product_form_infinite(inf).x;
    for (std::size_t j = 0; j < xi.size(); ++j) xi[j] *= j % 2 ? 1.8 : 0.6;
    std::vector<double> xf = solve_product_form_finite(fin).x;
    for (std::size_t j = 0; j < xf.size(); ++j) xf[j] *= j % 2 ? 0.3 : 0.7;
    const double ei = closed_form_error(si, xi, false);
    const double ef = closed_form_error(sf, xf, true);
    r.passed = ei < 1e-6 && ef < 1e-6;
    r.detail = "max |y - closed form|: infinite " + fmt(ei) + ", finite " + fmt(ef);
  });
}

// --- 6 ---------------------------------------------------------------------

CriterionResult lyapunov() {
  return timed(6, "lyapunov function and drift", 0.0, [](CriterionResult& r) {
    const PackingModel inf = acceptance_model("cap3");
    const PackingModel fin = acceptance_model("cap3-finite");
    const FluidSystem si = FluidSystem::infinite(inf);
    const FluidSystem sf = FluidSystem::finite(fin);
    const ProductFormSolution pi = solve_product_form_infinite(inf);
    const ProductFormSolution pf = solve_product_form_finite(fin);
    std::ostringstream os;

    // (a) nonincreasing L along trajectories started in X.
    const auto starts = oracle::hit_and_run(si, oracle::interior_point(si), 10, 11);
    double worst_rise = -std::numeric_limits<double>::infinity();
    IntegrateOptions io;
    io.t_end = 10.0;
    for (const auto& p : starts) {
      const Trajectory traj = integrate(si, oracle::to_state(si, p), io);
      for (std::size_t n = 1; n < traj.samples.size(); ++n) {
        worst_rise = std::max(worst_rise, traj.samples[n].lyapunov - traj.samples[n - 1].lyapunov);
      }
    }
    const bool a_ok = worst_rise <= 1e-8;
    os << "(a) max step increase " << fmt(worst_rise);

    // (b) drift sign at random interior points.
    double max_xi = -std::numeric_limits<double>::infinity();
    for (const auto& p : oracle::hit_and_run(si, oracle::interior_point(si), 1000, 12)) {
      max_xi = std::max(max_xi, si.drift(oracle::to_state(si, p)));
    }
    for (const auto& p : oracle::hit_and_run(sf, oracle::interior_point(sf), 500, 13)) {
      max_xi = std::max(max_xi, sf.drift(oracle::to_state(sf, p)));
    }
    for (std::uint64_t seed = 1; seed <= 500; ++seed) {
      const auto x = perturb(sf, pf.x, 0.05, seed);
      max_xi = std::max(max_xi, sf.drift(x));
    }
    const bool b_ok = max_xi <= 0.0;
    os << "; (b) max Xi " << fmt(max_xi);

    // (c) zero drift at the equilibria.
    const double xi_inf = si.drift(pi.x);
    const double xi_fin = sf.drift(pf.x);
    const bool c_ok = std::abs(xi_inf) <= 1e-9 && std::abs(xi_fin) <= 1e-9;
    os << "; (c) Xi(x*a) " << fmt(xi_inf) << ", Xi(x*box) " << fmt(xi_fin);

    // (d) forward differences of L along trajectories.
    // Samples whose increment L(t+delta)-L(t) is within 1e4 ulps of L are
    // below double resolution and are not compared.
    double worst_rel = 0.0;
    int compared = 0;
    auto check_fd = [&](const FluidSystem& sys, std::vector<double> x) {
      constexpr double delta = 1e-5;
      for (int n = 0; n <= 4000; ++n) {
        if (n % 500 == 0) {
          const double xi = sys.drift(x);
          const double l0 = sys.lyapunov(x);
          std::vector<double> ahead = x;
          rk4_step(sys, ahead, delta);
          const double fd = (sys.lyapunov(ahead) - l0) / delta;
          const double floor = 1e4 * std::numeric_limits<double>::epsilon() * std::abs(l0);
          if (std::abs(xi) * delta > floor) {
            worst_rel = std::max(worst_rel, std::abs(fd - xi) / std::abs(xi));
            ++compared;
          }
        }
        rk4_step(sys, x, 1e-3);
      }
    };
    check_fd(si, oracle::to_state(si, starts.front()));
    check_fd(sf, oracle::to_state(sf, oracle::hit_and_run(sf, oracle::interior_point(sf), 1, 14).front()));
    const bool d_ok = compared >= 8 && worst_rel < 1e-3;
    os << "; (d) max relative error " << fmt(worst_rel) << " over " << compared << " samples";

    r.passed = a_ok && b_ok && c_ok && d_ok;
    r.detail = os.str();
  });
}

// --- 7 ---------------------------------------------------------------------

CriterionResult product_form() {
  return timed(7, "product-form solvers", 0.0, [](CriterionResult& r) {
    double residual = 0.0, oracle_gap = 0.0, consistency = 0.0;
    for (const char* name : {"cap3", "twotier", "two-slot"}) {
      const PackingModel m = acceptance_model(name);
      const ProductFormSolution sol = solve_product_form_infinite(m);
      const auto ref = oracle::minimize_lyapunov(FluidSystem::infinite(m));
      residual = std::max(residual, sol.residual);
      for (std::size_t j = 0; j < sol.x.size(); ++j) {
        oracle_gap = std::max(oracle_gap, std::abs(sol.x[j] - ref.x(static_cast<Eigen::Index>(j))));
      }
    }
    for (const char* name : {"cap3-finite", "twotier-finite", "erlang"}) {
      const PackingModel m = acceptance_model(name);
      const ProductFormSolution sol = solve_product_form_finite(m);
      const auto ref = oracle::minimize_lyapunov(FluidSystem::finite(m));
      residual = std::max(residual, sol.residual);
      for (std::size_t bar = 0; bar < sol.xbar.size(); ++bar) {
        oracle_gap = std::max(oracle_gap, std::abs(sol.xbar[bar] - ref.x(static_cast<Eigen::Index>(bar))));
      }
      const ProductFormSolution twin = solve_product_form_infinite(m, sol.a);
      for (std::size_t j = 0; j < sol.x.size(); ++j) {
        consistency = std::max(consistency, std::abs(sol.x[j] - twin.x[j]));
      }
      for (std::size_t i = 0; i < sol.nu.size(); ++i) {
        consistency = std::max(consistency, std::abs(sol.nu[i] - twin.nu[i]));
      }
    }
    r.passed = residual < 1e-10 && oracle_gap <= 1e-6 && consistency <= 1e-8;
    r.detail = "max residual " + fmt(residual) + ", max oracle difference " + fmt(oracle_gap) +
               ", finite/infinite consistency " + fmt(consistency);
  });
}

// --- 8 ---------------------------------------------------------------------

CriterionResult stability() {
  return timed(8, "local stability of the finite equilibrium", 0.0, [](CriterionResult& r) {
    double worst = 0.0;
    for (const char* name : {"cap3-finite", "twotier-finite"}) {
      const PackingModel m = acceptance_model(name);
      const FluidSystem sys = FluidSystem::finite(m);
      const ProductFormSolution sol = solve_product_form_finite(m);
      IntegrateOptions io;
      io.t_end = 50.0;
      io.sample_every = 50000;
      for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto x0 = perturb(sys, sol.x, 0.05, seed);
        const Trajectory traj = integrate(sys, x0, io);
        worst = std::max(worst, euclidean_distance(traj.samples.back().x, sol.x));
      }
    }
    r.passed = worst < 1e-4;
    r.detail = "max |x(50) - x*box| over 40 trajectories: " + fmt(worst);
  });
}

// --- 10 --------------------------------------------------------------------

CriterionResult conjectures(const AcceptanceOptions& options) {
  return timed(10, "conjecture studies", 0.0, [&](CriterionResult& r) {
    ExperimentPlan plan;
    plan.r_values = {50, 100, 200};
    plan.horizon = 1000;
    plan.seeds = {1, 2, 3};
    plan.threads = options.threads;

    const PackingModel two_slot = acceptance_model("two-slot");
    plan.model_file = "two-slot.model";
    const Conjecture1Study c1 = run_conjecture1_study(two_slot, plan);
    const CsvTable t1 = conjecture1_csv(two_slot, plan, c1);

    const PackingModel fin = acceptance_model("cap3-finite");
    plan.model_file = "cap3-finite.model";
    const Conjecture2Study c2 = run_conjecture2_study(fin, plan);
    const CsvTable t2 = conjecture2_csv(fin, plan, c2);

    if (options.output_dir) {
      t1.write(*options.output_dir / "study_c1.csv");
      t2.write(*options.output_dir / "study_c2.csv");
    }
    r.warnings = c1.warnings;
    r.warnings.insert(r.warnings.end(), c2.warnings.begin(), c2.warnings.end());
    std::vector<double> d, blocking;
    for (const auto& row : c1.rows) d.push_back(row.distance.mean);
    for (const auto& row : c2.rows) {
      double total = 0.0;
      for (const auto& b : row.blocking) total += b.mean;
      blocking.push_back(total);
    }
    r.passed = t1.rows().size() == plan.r_values.size() && t2.rows().size() == plan.r_values.size();
    r.detail = "GRAND(Z^p) distance to LP face " + list(d) + "; GRAND-F total blocking " + list(blocking) +
               (strictly_decreasing(blocking) ? " (decreasing)" : " (not monotone)");
  });
}

}  // namespace

const std::vector<std::string>& acceptance_suites() {
  static const std::vector<std::string> names{"poisson",   "erlang",       "theorem1",  "theorem2",
                                              "fluid",     "lyapunov",     "product-form",
                                              "stability", "pull",         "conjectures", "all"};
  return names;
}

AcceptanceReport run_acceptance(std::string_view suite, const AcceptanceOptions& options) {
  const std::map<std::string_view, std::function<CriterionResult()>> suites{
      {"poisson", poisson},
      {"erlang", erlang},
      {"theorem1", [&] { return theorem1(options); }},
      {"theorem2", [&] { return theorem2(options); }},
      {"fluid", fluid_exactness},
      {"lyapunov", lyapunov},
      {"product-form", product_form},
      {"stability", stability},
      {"pull", pull},
      {"conjectures", [&] { return conjectures(options); }},
  };
  AcceptanceReport report;
  if (suite == "all") {
    for (const auto& name : acceptance_suites()) {
      if (name != "all") report.results.push_back(suites.at(name)());
    }
  } else {
    auto it = suites.find(suite);
    if (it == suites.end()) {
      fail(ErrorCode::InvalidArgument, "unknown acceptance suite `" + std::string(suite) + "`");
    }
    report.results.push_back(it->second());
  }
  std::sort(report.results.begin(), report.results.end(),
            [](const auto& a, const auto& b) { return a.id < b.id; });
  return report;
}

}  // namespace grand
