#include "grand/fluid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "grand/error.hpp"
#include "grand/rng.hpp"

namespace grand {

namespace {

constexpr double kBoxSlack = 1e-12;
constexpr double kOnXTolerance = 1e-6;

double xlogx_term(double x, double log_scale) {
  // x (log x + log_scale - 1), continuous at 0
  if (x <= 0.0) return 0.0;
  return x * (std::log(x) + log_scale - 1.0);
}

void check_size(const ConfigurationSet& set, std::span<const double> x) {
  if (x.size() != set.size()) {
    std::ostringstream os;
    os << "fluid state has " << x.size() << " entries, expected " << set.size();
    fail(ErrorCode::InvalidArgument, os.str());
  }
}

// Sorted-descent projection of v onto {u >= 0, sum u = total}.
void project_simplex(std::vector<double>& v, double total) {
  std::vector<double> u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumulative = 0.0;
  double theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumulative += u[j];
    const double t = (cumulative - total) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  for (double& x : v) x = std::max(0.0, x - theta);
}

}  // namespace

FluidMode parse_fluid_mode(std::string_view name) {
  if (name == "inf") return FluidMode::Infinite;
  if (name == "fin") return FluidMode::Finite;
  fail(ErrorCode::InvalidArgument, "unknown fluid mode `" + std::string(name) + "` (inf|fin)");
}

const char* to_string(FluidMode mode) {
  return mode == FluidMode::Infinite ? "inf" : "fin";
}

FluidSystem FluidSystem::infinite(const PackingModel& model, std::vector<double> a) {
  if (a.size() != static_cast<std::size_t>(model.num_server_types())) {
    fail(ErrorCode::InvalidArgument, "parameter vector a has the wrong length");
  }
  for (double v : a) {
    if (!(v > 0.0) || !std::isfinite(v)) fail(ErrorCode::InvalidArgument, "a_s must be positive");
  }
  return FluidSystem(model, FluidMode::Infinite, std::move(a));
}

FluidSystem FluidSystem::finite(const PackingModel& model) {
  if (!model.has_pools()) fail(ErrorCode::InvalidArgument, "finite mode needs pool sizes h");
  return FluidSystem(model, FluidMode::Finite, {});
}

FluidSystem FluidSystem::of(const PackingModel& model, FluidMode mode) {
  return mode == FluidMode::Infinite ? infinite(model) : finite(model);
}

FluidState FluidSystem::derive(std::span<const double> x) const {
  const auto& set = model_->configs();
  const int ni = set.num_types();
  const int ns = set.num_server_types();
  FluidState st;
  st.x.assign(x.begin(), x.end());
  st.xbar.assign(set.size_bar(), 0.0);
  st.y.assign(static_cast<std::size_t>(ni), 0.0);
  std::vector<double> occupied(static_cast<std::size_t>(ns), 0.0);
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    const std::size_t bar = nz[p];
    st.xbar[bar] = x[p];
    occupied[static_cast<std::size_t>(set.server_type(bar))] += x[p];
    for (int i = 0; i < ni; ++i) {
      st.y[static_cast<std::size_t>(i)] += set.count(bar, i) * x[p];
    }
  }
  st.z = std::accumulate(st.y.begin(), st.y.end(), 0.0);
  for (int s = 0; s < ns; ++s) {
    const auto us = static_cast<std::size_t>(s);
    st.xbar[set.zero(s)] =
        mode_ == FluidMode::Infinite ? a_[us] * st.z : model_->h()[us] - occupied[us];
  }
  st.availability.assign(static_cast<std::size_t>(ni), 0.0);
  for (int i = 0; i < ni; ++i) {
    double sum = 0.0;
    for (std::size_t bar : set.accepting(i)) sum += st.xbar[bar];
    st.availability[static_cast<std::size_t>(i)] = sum;
  }
  return st;
}

FluidState FluidSystem::evaluate(std::span<const double> x) const {
  const auto& set = model_->configs();
  check_size(set, x);
  for (double v : x) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      fail(ErrorCode::Domain, "fluid state components must be finite and nonnegative");
    }
  }
  FluidState st = derive(x);
  if (mode_ == FluidMode::Finite) {
    for (int s = 0; s < set.num_server_types(); ++s) {
      if (st.xbar[set.zero(s)] < -kBoxSlack) {
        fail(ErrorCode::Domain, "fluid state exceeds pool " + model_->server_names()[static_cast<std::size_t>(s)]);
      }
    }
  }
  return st;
}

FluidRhs FluidSystem::rhs_unchecked(std::span<const double> x) const {
  const auto& set = model_->configs();
  const FluidState st = derive(x);
  const auto& lambda = model_->lambda();
  const auto& mu = model_->mu();
  const auto edges = set.edges();
  FluidRhs out;
  out.dx.assign(set.size(), 0.0);
  out.rates.v.assign(edges.size(), 0.0);
  out.rates.w.assign(edges.size(), 0.0);
  out.rates.blocked.assign(static_cast<std::size_t>(set.num_types()), 0.0);
  for (int i = 0; i < set.num_types(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const double avail = st.availability[ui];
    if (!(avail > 0.0)) {
      if (mode_ == FluidMode::Infinite) {
        fail(ErrorCode::DegenerateAvailability,
             "no fluid availability for type " + model_->type_names()[ui]);
      }
      out.rates.blocked[ui] = lambda[ui];
    }
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    const auto ui = static_cast<std::size_t>(edge.type);
    const double avail = st.availability[ui];
    const double v = avail > 0.0 ? lambda[ui] * st.xbar[edge.source] / avail : 0.0;
    const double w = set.count(edge.config, edge.type) * mu[ui] * st.xbar[edge.config];
    out.rates.v[e] = v;
    out.rates.w[e] = w;
    out.dx[set.position(edge.config)] += v - w;
    if (const std::size_t p = set.position(edge.source); p != kNone) out.dx[p] -= v - w;
  }
  return out;
}

FluidRhs FluidSystem::rhs(std::span<const double> x) const {
  evaluate(x);
  return rhs_unchecked(x);
}

double FluidSystem::lyapunov(std::span<const double> x) const {
  if (mode_ == FluidMode::Infinite) return lyapunov_infinite(*model_, a_, x);
  const FluidState st = evaluate(x);
  return lyapunov_finite(*model_, st.xbar);
}

double FluidSystem::drift(std::span<const double> x) const {
  const auto& set = model_->configs();
  FluidState st = evaluate(x);
  if (mode_ == FluidMode::Infinite) {
    const auto& rho = model_->rho();
    for (std::size_t i = 0; i < rho.size(); ++i) {
      if (std::abs(st.y[i] - rho[i]) > kOnXTolerance) {
        fail(ErrorCode::Domain, "drift is defined on X only (y must equal rho)");
      }
    }
    // Zero configurations are evaluated at x_{0^s} = a_s on X.
    for (int s = 0; s < set.num_server_types(); ++s) {
      st.xbar[set.zero(s)] = a_[static_cast<std::size_t>(s)];
    }
    for (int i = 0; i < set.num_types(); ++i) {
      double sum = 0.0;
      for (std::size_t bar : set.accepting(i)) sum += st.xbar[bar];
      st.availability[static_cast<std::size_t>(i)] = sum;
    }
  } else {
    for (int s = 0; s < set.num_server_types(); ++s) {
      if (!(st.xbar[set.zero(s)] > 0.0)) {
        fail(ErrorCode::Domain, "drift needs every idle pool x_{0^s} > 0");
      }
    }
  }
  for (double v : x) {
    if (v == 0.0) return -std::numeric_limits<double>::infinity();
  }
  const auto edges = set.edges();
  const auto& mu = model_->mu();
  double total = 0.0;
  for (int i = 0; i < set.num_types(); ++i) {
    const auto ui = static_cast<std::size_t>(i);
    const auto of_type = set.edges_of_type(i);
    const double scale = mu[ui] / st.availability[ui];
    for (std::size_t a = 0; a < of_type.size(); ++a) {
      const Edge& e1 = edges[of_type[a]];
      const double k1 = set.count(e1.config, i);
      for (std::size_t b = a + 1; b < of_type.size(); ++b) {
        const Edge& e2 = edges[of_type[b]];
        const double k2 = set.count(e2.config, i);
        const double lhs = k1 * st.xbar[e1.config] * st.xbar[e2.source];
        const double rhs = k2 * st.xbar[e1.source] * st.xbar[e2.config];
        total += scale * (std::log(rhs) - std::log(lhs)) * (lhs - rhs);
      }
    }
  }
  return total;
}

FluidRhs fluid_rhs_infinite(const PackingModel& model, const std::vector<double>& a,
                            std::span<const double> x) {
  return FluidSystem::infinite(model, a).rhs(x);
}

FluidRhs fluid_rhs_finite(const PackingModel& model, std::span<const double> x) {
  return FluidSystem::finite(model).rhs(x);
}

double lyapunov_infinite(const PackingModel& model, const std::vector<double>& a,
                         std::span<const double> x) {
  const auto& set = model.configs();
  check_size(set, x);
  double total = 0.0;
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    if (x[p] < 0.0) fail(ErrorCode::Domain, "fluid state components must be nonnegative");
    const std::size_t bar = nz[p];
    const double log_scale =
        set.log_factorial_product(bar) - std::log(a[static_cast<std::size_t>(set.server_type(bar))]);
    total += xlogx_term(x[p], log_scale);
  }
  return total;
}

double lyapunov_finite(const PackingModel& model, std::span<const double> xbar) {
  const auto& set = model.configs();
  if (xbar.size() != set.size_bar()) {
    fail(ErrorCode::InvalidArgument, "lyapunov_finite expects a vector over all configurations");
  }
  double total = 0.0;
  for (std::size_t bar = 0; bar < xbar.size(); ++bar) {
    if (xbar[bar] < -kBoxSlack) fail(ErrorCode::Domain, "fluid state lies outside the pool box");
    total += xlogx_term(xbar[bar], set.log_factorial_product(bar));
  }
  return total;
}

std::vector<double> expand_finite(const PackingModel& model, std::span<const double> x) {
  return FluidSystem::finite(model).evaluate(x).xbar;
}

double drift_xi(const FluidSystem& system, std::span<const double> x) {
  return system.drift(x);
}

std::vector<double> project_feasible(const FluidSystem& system, std::span<const double> x) {
  const auto& set = system.model().configs();
  check_size(set, x);
  std::vector<double> out(x.begin(), x.end());
  for (double& v : out) v = std::max(0.0, v);
  if (system.mode() == FluidMode::Infinite) return out;
  const auto& h = system.model().h();
  std::vector<std::vector<std::size_t>> blocks(static_cast<std::size_t>(set.num_server_types()));
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    blocks[static_cast<std::size_t>(set.server_type(nz[p]))].push_back(p);
  }
  for (std::size_t s = 0; s < blocks.size(); ++s) {
    double sum = 0.0;
    for (std::size_t p : blocks[s]) sum += out[p];
    if (sum <= h[s]) continue;
    std::vector<double> v;
    for (std::size_t p : blocks[s]) v.push_back(x[p]);
    project_simplex(v, h[s]);
    for (std::size_t j = 0; j < blocks[s].size(); ++j) out[blocks[s][j]] = v[j];
  }
  return out;
}

double rk4_step(const FluidSystem& system, std::vector<double>& x, double dt) {
  const std::size_t n = x.size();
  auto axpy = [&](const std::vector<double>& k, double c) {
    std::vector<double> out(n);
    for (std::size_t j = 0; j < n; ++j) out[j] = x[j] + c * k[j];
    return out;
  };
  const auto k1 = system.rhs_unchecked(x).dx;
  // Intermediate stages only leave the valid region when dt overshoots.
  auto stage = [&](const std::vector<double>& at) {
    try {
      return system.rhs_unchecked(at).dx;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::DegenerateAvailability) throw;
      fail(ErrorCode::StepSize, std::string("intermediate RK4 stage: ") + e.what() + "; reduce dt");
    }
  };
  const auto k2 = stage(axpy(k1, dt / 2));
  const auto k3 = stage(axpy(k2, dt / 2));
  const auto k4 = stage(axpy(k3, dt));
  for (std::size_t j = 0; j < n; ++j) {
    x[j] += dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
  }
  const auto projected = project_feasible(system, x);
  double clipped = 0.0;
  for (std::size_t j = 0; j < n; ++j) clipped += std::abs(projected[j] - x[j]);
  x = projected;
  return clipped;
}

Trajectory integrate(const FluidSystem& system, std::span<const double> x0,
                     const IntegrateOptions& options) {
  if (!(options.dt > 0.0)) fail(ErrorCode::InvalidArgument, "dt must be positive");
  if (!(options.t_end >= 0.0)) fail(ErrorCode::InvalidArgument, "t_end must be nonnegative");
  if (options.sample_every == 0) fail(ErrorCode::InvalidArgument, "sample_every must be positive");
  system.evaluate(x0);

  Trajectory traj;
  traj.mode = system.mode();
  std::vector<double> x(x0.begin(), x0.end());
  auto sample = [&](double t) {
    const FluidState st = system.evaluate(x);
    TrajectorySample s;
    s.t = t;
    s.x = x;
    s.y = st.y;
    s.z = st.z;
    s.lyapunov = system.lyapunov(x);
    try {
      s.xi = system.drift(x);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::Domain) throw;
      s.xi = std::numeric_limits<double>::quiet_NaN();
    }
    traj.samples.push_back(std::move(s));
  };

  const auto steps = static_cast<std::size_t>(std::ceil(options.t_end / options.dt - 1e-9));
  sample(0.0);
  for (std::size_t n = 0; n < steps; ++n) {
    const double t0 = static_cast<double>(n) * options.dt;
    const double t1 = std::min(options.t_end, static_cast<double>(n + 1) * options.dt);
    const double clipped = rk4_step(system, x, t1 - t0);
    traj.max_step_clip = std::max(traj.max_step_clip, clipped);
    traj.total_clip += clipped;
    if (clipped > options.clip_tolerance) {
      std::ostringstream os;
      os << "integrator clipped " << clipped << " in the step ending at t = " << t1
         << "; reduce dt";
      fail(ErrorCode::StepSize, os.str());
    }
    if ((n + 1) % options.sample_every == 0 || n + 1 == steps) sample(t1);
  }
  return traj;
}

std::vector<double> perturb(const FluidSystem& system, std::span<const double> center,
                            double relative_eps, std::uint64_t seed) {
  check_size(system.model().configs(), center);
  StreamRng rng(seed, Stream::Perturbation);
  std::vector<double> dir(center.size());
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& d : dir) {
      d = rng.next_normal();
      norm += d * d;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  double radius = 0.0;
  for (double c : center) radius += c * c;
  radius = relative_eps * std::sqrt(radius);
  std::vector<double> out(center.begin(), center.end());
  for (std::size_t j = 0; j < out.size(); ++j) out[j] += radius * dir[j] / norm;
  return project_feasible(system, out);
}

}  // namespace grand
