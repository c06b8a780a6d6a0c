// grandsim: command-line front end over the grand C API.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "grand/grand.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct StringDeleter {
  void operator()(char* s) const { grand_string_free(s); }
};
using OwnedString = std::unique_ptr<char, StringDeleter>;

struct ModelDeleter {
  void operator()(grand_model* m) const { grand_model_free(m); }
};
using ModelHandle = std::unique_ptr<grand_model, ModelDeleter>;

struct Globals {
  std::string model;
  std::string out;
  std::uint64_t seed = 1;
  int threads = 1;
};

int report(grand_status status) {
  std::cerr << "grandsim: " << grand_status_string(status) << ": " << grand_last_error() << '\n';
  return status == GRAND_E_INVALID_ARGUMENT ? kExitUsage : kExitFailure;
}

int emit(const std::string& out, const char* text) {
  if (out.empty() || out == "-") {
    std::fputs(text, stdout);
    return 0;
  }
  std::ofstream file(out, std::ios::binary);
  if (!file || !(file << text)) {
    std::cerr << "grandsim: cannot write " << out << '\n';
    return kExitFailure;
  }
  return 0;
}

// Loads --model; returns nullptr after printing the error.
ModelHandle load(const Globals& g, int& code) {
  if (g.model.empty()) {
    std::cerr << "grandsim: --model is required\n";
    code = kExitUsage;
    return nullptr;
  }
  grand_model* raw = nullptr;
  if (const grand_status st = grand_model_load(g.model.c_str(), &raw); st != GRAND_OK) {
    code = report(st);
    return nullptr;
  }
  return ModelHandle(raw);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation and numerics for heterogeneous packing service systems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(grand_version()));

  Globals g;
  app.add_option("--model", g.model, "Model definition file");
  app.add_option("--out", g.out, "Output file (accept: directory for study CSVs); default stdout");
  app.add_option("--seed", g.seed, "Base random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads for studies and sweeps")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* validate = app.add_subcommand("validate", "Validate a model and print its summary")->fallthrough();

  auto* simulate = app.add_subcommand("simulate", "Simulate the Markov chain and report averages")->fallthrough();
  std::string policy;
  double r = 1.0, horizon = 1000.0;
  std::optional<double> warmup;
  int batches = 20;
  simulate->add_option("--policy", policy, "grand-az | grand-zp | grand-f")
      ->required()
      ->check(CLI::IsMember({"grand-az", "grand-zp", "grand-f"}));
  simulate->add_option("--r", r, "Scaling parameter")->check(CLI::PositiveNumber)->capture_default_str();
  simulate->add_option("--horizon", horizon, "Simulated time")->capture_default_str();
  simulate->add_option("--warmup", warmup, "Discarded initial time (default 20% of horizon)");
  simulate->add_option("--batches", batches, "Batch count for standard errors")->capture_default_str();

  auto* fluid = app.add_subcommand("fluid", "Integrate the fluid dynamics")->fallthrough();
  std::string mode, x0 = "equilibrium";
  double t_end = 10.0, dt = 1e-3;
  std::size_t sample_every = 100;
  fluid->add_option("--mode", mode, "inf | fin")->required()->check(CLI::IsMember({"inf", "fin"}));
  fluid->add_option("--x0", x0, "CSV file | equilibrium | perturbed:<eps>:<seed>")->capture_default_str();
  fluid->add_option("--t-end", t_end, "End time")->capture_default_str();
  fluid->add_option("--dt", dt, "RK4 step")->check(CLI::PositiveNumber)->capture_default_str();
  fluid->add_option("--sample-every", sample_every, "Steps between trajectory rows")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* solve = app.add_subcommand("solve", "Equilibria, LP optimum, feasibility, alpha sweep")->fallthrough();
  std::string what;
  std::vector<double> alphas{1e-1, 1e-2, 1e-3, 1e-4};
  solve->add_option("--what", what, "product-inf | product-fin | lp | lp-inequality | feasibility | alpha-sweep")
      ->required()
      ->check(CLI::IsMember({"product-inf", "product-fin", "lp", "lp-inequality", "feasibility", "alpha-sweep"}));
  solve->add_option("--alphas", alphas, "Decreasing alpha values for alpha-sweep")
      ->delimiter(',')
      ->capture_default_str();

  std::vector<double> r_values{50, 100, 200};
  std::vector<std::uint64_t> seeds;
  double study_horizon = 2000.0;
  std::optional<double> study_warmup;
  int study_batches = 20;
  std::vector<CLI::App*> studies;
  for (const auto& [name, help] : {std::pair{"study-t1", "Distance to the product-form point versus r (GRAND(aZ))"},
                                   std::pair{"study-c1", "Distance to the LP optimal face versus r (GRAND(Z^p))"},
                                   std::pair{"study-c2", "Blocking and pull rate versus r (GRAND-F)"}}) {
    auto* sub = app.add_subcommand(name, help)->fallthrough();
    sub->add_option("--r", r_values, "Increasing r values")->delimiter(',')->capture_default_str();
    sub->add_option("--seeds", seeds, "Seeds (default: five seeds from --seed)")->delimiter(',');
    sub->add_option("--horizon", study_horizon, "Simulated time per run")->capture_default_str();
    sub->add_option("--warmup", study_warmup, "Discarded initial time (default 20% of horizon)");
    sub->add_option("--batches", study_batches, "Batch count per run")->capture_default_str();
    studies.push_back(sub);
  }

  auto* accept = app.add_subcommand("accept", "Run built-in acceptance suites")->fallthrough();
  std::string suite;
  std::string json_path;
  accept->add_option("suite", suite,
                     "poisson | erlang | theorem1 | theorem2 | fluid | lyapunov | product-form | "
                     "stability | pull | conjectures | all")
      ->required();
  accept->add_option("--json", json_path, "Also write a JSON report here");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  int code = 0;
  if (validate->parsed()) {
    ModelHandle model = load(g, code);
    if (!model) return code;
    char* text = nullptr;
    if (const auto st = grand_model_summary(model.get(), &text); st != GRAND_OK) return report(st);
    OwnedString owned(text);
    std::cout << "ok: " << g.model << '\n' << text;
    return 0;
  }

  if (simulate->parsed()) {
    ModelHandle model = load(g, code);
    if (!model) return code;
    grand_run_options opts;
    grand_run_options_init(&opts);
    opts.policy = policy.c_str();
    opts.r = r;
    opts.horizon = horizon;
    opts.warmup = warmup.value_or(-1.0);
    opts.seed = g.seed;
    opts.batches = batches;
    grand_run* run = nullptr;
    if (const auto st = grand_simulate(model.get(), &opts, &run); st != GRAND_OK) return report(st);
    char* csv = nullptr;
    const auto st = grand_run_csv(run, &csv);
    grand_run_free(run);
    if (st != GRAND_OK) return report(st);
    OwnedString owned(csv);
    return emit(g.out, csv);
  }

  if (fluid->parsed()) {
    ModelHandle model = load(g, code);
    if (!model) return code;
    grand_fluid_options opts;
    grand_fluid_options_init(&opts);
    opts.mode = mode.c_str();
    opts.x0 = x0.c_str();
    opts.t_end = t_end;
    opts.dt = dt;
    opts.sample_every = sample_every;
    grand_trajectory* traj = nullptr;
    if (const auto st = grand_fluid_integrate(model.get(), &opts, &traj); st != GRAND_OK) return report(st);
    char* csv = nullptr;
    const auto st = grand_trajectory_csv(traj, &csv);
    grand_trajectory_free(traj);
    if (st != GRAND_OK) return report(st);
    OwnedString owned(csv);
    return emit(g.out, csv);
  }

  if (solve->parsed()) {
    ModelHandle model = load(g, code);
    if (!model) return code;
    char* csv = nullptr;
    if (const auto st = grand_solve_csv(model.get(), what.c_str(), alphas.data(), alphas.size(), g.threads, &csv);
        st != GRAND_OK) {
      return report(st);
    }
    OwnedString owned(csv);
    return emit(g.out, csv);
  }

  for (std::size_t k = 0; k < studies.size(); ++k) {
    if (!studies[k]->parsed()) continue;
    ModelHandle model = load(g, code);
    if (!model) return code;
    if (seeds.empty()) {
      for (std::uint64_t j = 0; j < 5; ++j) seeds.push_back(g.seed + j);
    }
    static const char* kinds[] = {"t1", "c1", "c2"};
    grand_study_options opts;
    grand_study_options_init(&opts);
    opts.kind = kinds[k];
    opts.model_file = g.model.c_str();
    opts.r_values = r_values.data();
    opts.num_r = r_values.size();
    opts.seeds = seeds.data();
    opts.num_seeds = seeds.size();
    opts.horizon = study_horizon;
    opts.warmup = study_warmup.value_or(-1.0);
    opts.batches = study_batches;
    opts.threads = g.threads;
    char* csv = nullptr;
    if (const auto st = grand_study_csv(model.get(), &opts, &csv); st != GRAND_OK) return report(st);
    OwnedString owned(csv);
    return emit(g.out, csv);
  }

  if (accept->parsed()) {
    char* text = nullptr;
    char* json = nullptr;
    const auto st = grand_accept(suite.c_str(), g.threads, g.out.empty() ? nullptr : g.out.c_str(), &text,
                                 json_path.empty() ? nullptr : &json);
    OwnedString owned_text(text), owned_json(json);
    if (st != GRAND_OK && st != GRAND_E_ACCEPTANCE_FAILED) return report(st);
    std::fputs(text, stdout);
    if (json && emit(json_path, json) != 0) return kExitFailure;
    return st == GRAND_OK ? 0 : kExitFailure;
  }
  return kExitUsage;
}
