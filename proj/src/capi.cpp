#include "grand/grand.h"

#include <charconv>
#include <cstdlib>
#include <cstring>
#include <memory>
#include <string>

#include "grand/acceptance.hpp"
#include "grand/csv.hpp"
#include "grand/fluid.hpp"
#include "grand/model_io.hpp"
#include "grand/optimize.hpp"
#include "grand/simulator.hpp"
#include "grand/studies.hpp"

struct grand_model {
  grand::PackingModel model;
};

struct grand_run {
  std::shared_ptr<const grand::PackingModel> model;
  grand::RunStatistics stats;
};

struct grand_trajectory {
  std::shared_ptr<const grand::PackingModel> model;
  grand::Trajectory trajectory;
};

namespace {

thread_local std::string last_error;

grand_status to_status(grand::ErrorCode code) {
  using grand::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return GRAND_E_INVALID_ARGUMENT;
    case ErrorCode::Parse: return GRAND_E_PARSE;
    case ErrorCode::Model: return GRAND_E_MODEL;
    case ErrorCode::UnboundedSet: return GRAND_E_UNBOUNDED_SET;
    case ErrorCode::Infeasible: return GRAND_E_INFEASIBLE;
    case ErrorCode::NoConvergence: return GRAND_E_NO_CONVERGENCE;
    case ErrorCode::DegenerateAvailability: return GRAND_E_DEGENERATE_AVAILABILITY;
    case ErrorCode::Domain: return GRAND_E_DOMAIN;
    case ErrorCode::StepSize: return GRAND_E_STEP_SIZE;
    case ErrorCode::InsufficientData: return GRAND_E_INSUFFICIENT_DATA;
    case ErrorCode::Io: return GRAND_E_IO;
  }
  return GRAND_E_INTERNAL;
}

template <class F>
grand_status guarded(F&& body) {
  last_error.clear();
  try {
    return body();
  } catch (const grand::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return GRAND_E_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return GRAND_E_INTERNAL;
  }
}

grand_status invalid(const char* msg) {
  last_error = msg;
  return GRAND_E_INVALID_ARGUMENT;
}

char* duplicate(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

grand_status copy_out(const std::vector<double>& src, double* out, size_t n) {
  if (!out || n != src.size()) return invalid("output buffer has the wrong length");
  std::copy(src.begin(), src.end(), out);
  return GRAND_OK;
}

std::optional<double> warmup_of(double w) {
  if (w < 0.0) return std::nullopt;
  return w;
}

// "perturbed:<eps>:<seed>" -> (eps, seed)
bool parse_perturbed(std::string_view x0_text, double& eps, std::uint64_t& seed) {
  constexpr std::string_view prefix = "perturbed:";
  if (x0_text.substr(0, prefix.size()) != prefix) return false;
  x0_text.remove_prefix(prefix.size());
  const auto colon = x0_text.find(':');
  if (colon == std::string_view::npos) {
    grand::fail(grand::ErrorCode::InvalidArgument, "expected perturbed:<eps>:<seed>");
  }
  const auto e = x0_text.substr(0, colon);
  const auto s = x0_text.substr(colon + 1);
  auto r1 = std::from_chars(e.data(), e.data() + e.size(), eps);
  auto r2 = std::from_chars(s.data(), s.data() + s.size(), seed);
  if (r1.ec != std::errc{} || r1.ptr != e.data() + e.size() || r2.ec != std::errc{} ||
      r2.ptr != s.data() + s.size() || !(eps >= 0.0)) {
    grand::fail(grand::ErrorCode::InvalidArgument, "expected perturbed:<eps>:<seed>");
  }
  return true;
}

}  // namespace

extern "C" {

const char* grand_version(void) { return "1.0.0"; }

const char* grand_last_error(void) { return last_error.c_str(); }

const char* grand_status_string(grand_status status) {
  switch (status) {
    case GRAND_OK: return "ok";
    case GRAND_E_INVALID_ARGUMENT: return "invalid argument";
    case GRAND_E_PARSE: return "parse error";
    case GRAND_E_MODEL: return "invalid model";
    case GRAND_E_UNBOUNDED_SET: return "unbounded configuration set";
    case GRAND_E_INFEASIBLE: return "infeasible";
    case GRAND_E_NO_CONVERGENCE: return "no convergence";
    case GRAND_E_DEGENERATE_AVAILABILITY: return "degenerate availability";
    case GRAND_E_DOMAIN: return "domain error";
    case GRAND_E_STEP_SIZE: return "step size error";
    case GRAND_E_INSUFFICIENT_DATA: return "insufficient data";
    case GRAND_E_IO: return "i/o error";
    case GRAND_E_ACCEPTANCE_FAILED: return "acceptance failed";
    case GRAND_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void grand_string_free(char* s) { std::free(s); }

grand_status grand_model_load(const char* path, grand_model** out) {
  if (!path || !out) return invalid("null argument");
  return guarded([&] {
    *out = new grand_model{grand::load_model(path)};
    return GRAND_OK;
  });
}

grand_status grand_model_parse(const char* text, grand_model** out) {
  if (!text || !out) return invalid("null argument");
  return guarded([&] {
    *out = new grand_model{grand::parse_model(text)};
    return GRAND_OK;
  });
}

grand_status grand_model_builtin(const char* name, grand_model** out) {
  if (!name || !out) return invalid("null argument");
  return guarded([&] {
    *out = new grand_model{grand::acceptance_model(name)};
    return GRAND_OK;
  });
}

void grand_model_free(grand_model* model) { delete model; }

size_t grand_model_num_types(const grand_model* model) {
  return model ? static_cast<size_t>(model->model.num_types()) : 0;
}

size_t grand_model_num_server_types(const grand_model* model) {
  return model ? static_cast<size_t>(model->model.num_server_types()) : 0;
}

size_t grand_model_num_configs(const grand_model* model) {
  return model ? model->model.configs().size() : 0;
}

grand_status grand_model_config_label(const grand_model* model, size_t index, char** out) {
  if (!model || !out) return invalid("null argument");
  if (index >= model->model.configs().size()) return invalid("configuration index out of range");
  return guarded([&] {
    *out = duplicate(model->model.label(model->model.configs().nonzero()[index]));
    return GRAND_OK;
  });
}

grand_status grand_model_summary(const grand_model* model, char** out) {
  if (!model || !out) return invalid("null argument");
  return guarded([&] {
    *out = duplicate(grand::model_summary(model->model));
    return GRAND_OK;
  });
}

void grand_run_options_init(grand_run_options* options) {
  if (!options) return;
  options->policy = "grand-az";
  options->r = 1.0;
  options->horizon = 1000.0;
  options->warmup = -1.0;
  options->seed = 1;
  options->batches = 20;
}

grand_status grand_simulate(const grand_model* model, const grand_run_options* options,
                            grand_run** out) {
  if (!model || !options || !out || !options->policy) return invalid("null argument");
  return guarded([&] {
    grand::RunOptions opts;
    opts.policy = grand::parse_policy(options->policy);
    opts.r = options->r;
    opts.horizon = options->horizon;
    opts.warmup = warmup_of(options->warmup);
    opts.seed = options->seed;
    opts.batches = options->batches;
    auto shared = std::make_shared<const grand::PackingModel>(model->model);
    auto stats = grand::run(*shared, opts);
    *out = new grand_run{std::move(shared), std::move(stats)};
    return GRAND_OK;
  });
}

void grand_run_free(grand_run* run) { delete run; }

uint64_t grand_run_events(const grand_run* run) { return run ? run->stats.events : 0; }

grand_status grand_run_x_mean(const grand_run* run, double* out, size_t n) {
  if (!run) return invalid("null argument");
  return copy_out(run->stats.x_mean, out, n);
}

grand_status grand_run_y_mean(const grand_run* run, double* out, size_t n) {
  if (!run) return invalid("null argument");
  return copy_out(run->stats.y_mean, out, n);
}

grand_status grand_run_blocking(const grand_run* run, double* out, size_t n) {
  if (!run) return invalid("null argument");
  return copy_out(run->stats.blocking, out, n);
}

double grand_run_pull_rate(const grand_run* run) { return run ? run->stats.pull_rate : 0.0; }

grand_status grand_run_csv(const grand_run* run, char** out) {
  if (!run || !out) return invalid("null argument");
  return guarded([&] {
    *out = duplicate(grand::run_statistics_csv(*run->model, run->stats).str());
    return GRAND_OK;
  });
}

void grand_fluid_options_init(grand_fluid_options* options) {
  if (!options) return;
  options->mode = "inf";
  options->x0 = "equilibrium";
  options->t_end = 10.0;
  options->dt = 1e-3;
  options->sample_every = 100;
}

grand_status grand_fluid_integrate(const grand_model* model, const grand_fluid_options* options,
                                   grand_trajectory** out) {
  if (!model || !options || !out || !options->mode || !options->x0) return invalid("null argument");
  return guarded([&] {
    auto shared = std::make_shared<const grand::PackingModel>(model->model);
    const auto mode = grand::parse_fluid_mode(options->mode);
    const auto system = grand::FluidSystem::of(*shared, mode);
    auto equilibrium = [&] {
      return mode == grand::FluidMode::Infinite ? grand::solve_product_form_infinite(*shared).x
                                                : grand::solve_product_form_finite(*shared).x;
    };
    const std::string_view x0_text = options->x0;
    std::vector<double> x0;
    double eps = 0.0;
    std::uint64_t seed = 0;
    if (x0_text == "equilibrium") {
      x0 = equilibrium();
    } else if (parse_perturbed(x0_text, eps, seed)) {
      x0 = grand::perturb(system, equilibrium(), eps, seed);
    } else {
      x0 = grand::read_state_csv(*shared, std::string(x0_text));
    }
    grand::IntegrateOptions io;
    io.t_end = options->t_end;
    io.dt = options->dt;
    io.sample_every = options->sample_every;
    auto traj = grand::integrate(system, x0, io);
    *out = new grand_trajectory{std::move(shared), std::move(traj)};
    return GRAND_OK;
  });
}

void grand_trajectory_free(grand_trajectory* trajectory) { delete trajectory; }

size_t grand_trajectory_size(const grand_trajectory* trajectory) {
  return trajectory ? trajectory->trajectory.samples.size() : 0;
}

grand_status grand_trajectory_final(const grand_trajectory* trajectory, double* out, size_t n) {
  if (!trajectory || trajectory->trajectory.samples.empty()) return invalid("empty trajectory");
  return copy_out(trajectory->trajectory.samples.back().x, out, n);
}

grand_status grand_trajectory_csv(const grand_trajectory* trajectory, char** out) {
  if (!trajectory || !out) return invalid("null argument");
  return guarded([&] {
    *out = duplicate(grand::trajectory_csv(*trajectory->model, trajectory->trajectory).str());
    return GRAND_OK;
  });
}

grand_status grand_solve_csv(const grand_model* model, const char* what, const double* alphas,
                             size_t num_alphas, int threads, char** out) {
  if (!model || !what || !out) return invalid("null argument");
  if (num_alphas > 0 && !alphas) return invalid("null alpha list");
  return guarded([&] {
    const auto& m = model->model;
    const std::string_view w = what;
    grand::CsvTable table({});
    if (w == "product-inf") {
      table = grand::product_form_csv(m, grand::solve_product_form_infinite(m));
    } else if (w == "product-fin") {
      table = grand::product_form_csv(m, grand::solve_product_form_finite(m));
    } else if (w == "lp") {
      table = grand::lp_csv(m, grand::solve_lp(m));
    } else if (w == "lp-inequality") {
      table = grand::lp_csv(m, grand::solve_lp_inequality(m));
    } else if (w == "feasibility") {
      table = grand::feasibility_csv(m, grand::check_feasibility(m));
    } else if (w == "alpha-sweep") {
      if (num_alphas == 0) grand::fail(grand::ErrorCode::InvalidArgument, "alpha-sweep needs alphas");
      const std::vector<double> list(alphas, alphas + num_alphas);
      table = grand::alpha_sweep_csv(m, grand::alpha_sweep(m, list, threads));
    } else {
      grand::fail(grand::ErrorCode::InvalidArgument,
                  "unknown solve target `" + std::string(w) + "`");
    }
    *out = duplicate(table.str());
    return GRAND_OK;
  });
}

void grand_study_options_init(grand_study_options* options) {
  if (!options) return;
  static const double r_values[] = {50, 100, 200};
  static const uint64_t seeds[] = {1, 2, 3, 4, 5};
  options->kind = "t1";
  options->model_file = "";
  options->r_values = r_values;
  options->num_r = 3;
  options->seeds = seeds;
  options->num_seeds = 5;
  options->horizon = 2000.0;
  options->warmup = -1.0;
  options->batches = 20;
  options->threads = 1;
}

grand_status grand_study_csv(const grand_model* model, const grand_study_options* options,
                             char** out) {
  if (!model || !options || !out || !options->kind) return invalid("null argument");
  if ((options->num_r && !options->r_values) || (options->num_seeds && !options->seeds)) {
    return invalid("null list");
  }
  return guarded([&] {
    const auto& m = model->model;
    grand::ExperimentPlan plan;
    plan.model_file = options->model_file ? options->model_file : "";
    plan.r_values.assign(options->r_values, options->r_values + options->num_r);
    plan.seeds.assign(options->seeds, options->seeds + options->num_seeds);
    plan.horizon = options->horizon;
    plan.warmup = warmup_of(options->warmup);
    plan.batches = options->batches;
    plan.threads = options->threads;
    const std::string_view kind = options->kind;
    std::string csv;
    if (kind == "t1") {
      csv = grand::theorem1_csv(m, plan, grand::run_theorem1_study(m, plan)).str();
    } else if (kind == "c1") {
      csv = grand::conjecture1_csv(m, plan, grand::run_conjecture1_study(m, plan)).str();
    } else if (kind == "c2") {
      csv = grand::conjecture2_csv(m, plan, grand::run_conjecture2_study(m, plan)).str();
    } else {
      grand::fail(grand::ErrorCode::InvalidArgument, "unknown study `" + std::string(kind) + "`");
    }
    *out = duplicate(csv);
    return GRAND_OK;
  });
}

grand_status grand_accept(const char* suite, int threads, const char* output_dir, char** text,
                          char** json) {
  if (!suite || !text) return invalid("null argument");
  return guarded([&] {
    grand::AcceptanceOptions opts;
    opts.threads = threads;
    if (output_dir) opts.output_dir = output_dir;
    const auto report = grand::run_acceptance(suite, opts);
    *text = duplicate(report.text());
    if (json) *json = duplicate(report.json());
    if (!report.passed()) {
      last_error = "one or more acceptance criteria failed";
      return GRAND_E_ACCEPTANCE_FAILED;
    }
    return GRAND_OK;
  });
}

}  // extern "C"
