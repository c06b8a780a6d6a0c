#include "grand/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "grand/error.hpp"
#include "grand/optimize.hpp"
#include "grand/rng.hpp"

namespace grand::oracle {

namespace {

// Polytope coordinate j -> bar index.
std::vector<std::size_t> coordinates(const FluidSystem& system) {
  const auto& set = system.model().configs();
  if (system.mode() == FluidMode::Infinite) {
    const auto nz = set.nonzero();
    return {nz.begin(), nz.end()};
  }
  std::vector<std::size_t> all(set.size_bar());
  for (std::size_t bar = 0; bar < all.size(); ++bar) all[bar] = bar;
  return all;
}

Eigen::VectorXd gradient(const FluidSystem& system, const Eigen::VectorXd& x) {
  const auto& set = system.model().configs();
  const auto coords = coordinates(system);
  Eigen::VectorXd g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const std::size_t bar = coords[static_cast<std::size_t>(j)];
    double v = std::log(x(j)) + set.log_factorial_product(bar);
    if (system.mode() == FluidMode::Infinite) {
      v -= std::log(system.a()[static_cast<std::size_t>(set.server_type(bar))]);
    }
    g(j) = v;
  }
  return g;
}

double objective(const FluidSystem& system, const Eigen::VectorXd& x) {
  const auto& set = system.model().configs();
  const auto coords = coordinates(system);
  double total = 0.0;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    if (x(j) < 0.0) return std::numeric_limits<double>::infinity();
    if (x(j) == 0.0) continue;
    const std::size_t bar = coords[static_cast<std::size_t>(j)];
    double scale = set.log_factorial_product(bar) - 1.0;
    if (system.mode() == FluidMode::Infinite) {
      scale -= std::log(system.a()[static_cast<std::size_t>(set.server_type(bar))]);
    }
    total += x(j) * (std::log(x(j)) + scale);
  }
  return total;
}

}  // namespace

double erlang_b(int servers, double offered_load) {
  if (servers < 0 || !(offered_load >= 0.0)) {
    fail(ErrorCode::InvalidArgument, "erlang_b needs n >= 0 and A >= 0");
  }
  double b = 1.0;
  for (int n = 1; n <= servers; ++n) b = offered_load * b / (n + offered_load * b);
  return b;
}

Polytope feasible_polytope(const FluidSystem& system) {
  const auto& set = system.model().configs();
  const auto coords = coordinates(system);
  const int ni = set.num_types();
  const int ns = system.mode() == FluidMode::Finite ? set.num_server_types() : 0;
  Polytope poly;
  poly.C = Eigen::MatrixXd::Zero(ni + ns, static_cast<Eigen::Index>(coords.size()));
  poly.d.resize(ni + ns);
  for (std::size_t j = 0; j < coords.size(); ++j) {
    const auto col = static_cast<Eigen::Index>(j);
    for (int i = 0; i < ni; ++i) poly.C(i, col) = set.count(coords[j], i);
    if (ns > 0) poly.C(ni + set.server_type(coords[j]), col) = 1.0;
  }
  for (int i = 0; i < ni; ++i) poly.d(i) = system.model().rho()[static_cast<std::size_t>(i)];
  for (int s = 0; s < ns; ++s) poly.d(ni + s) = system.model().h()[static_cast<std::size_t>(s)];
  return poly;
}

Eigen::VectorXd interior_point(const FluidSystem& system) {
  const PackingModel& model = system.model();
  const auto& set = model.configs();
  const auto nz = set.nonzero();
  const int ni = set.num_types();

  // q > 0 on K with demand met: a small uniform mass topped up on the e_i.
  std::vector<double> per_type(static_cast<std::size_t>(ni), 0.0);
  for (std::size_t bar : nz) {
    for (int i = 0; i < ni; ++i) per_type[static_cast<std::size_t>(i)] += set.count(bar, i);
  }
  double eps = std::numeric_limits<double>::infinity();
  for (int i = 0; i < ni; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    eps = std::min(eps, 0.5 * model.rho()[ui] / per_type[ui]);
  }
  std::vector<double> q(nz.size(), eps);
  for (int i = 0; i < ni; ++i) {
    const auto ui = static_cast<std::size_t>(i);
    Configuration unit{set.servers_for(i).front(), std::vector<int>(static_cast<std::size_t>(ni), 0)};
    unit.counts[ui] = 1;
    q[set.position(set.find(unit))] += model.rho()[ui] - eps * per_type[ui];
  }
  if (system.mode() == FluidMode::Infinite) {
    return Eigen::Map<Eigen::VectorXd>(q.data(), static_cast<Eigen::Index>(q.size()));
  }

  // Finite mode: blend with the max-min-idle witness so all pools stay slack.
  const FeasibilityReport feas = check_feasibility(model);
  if (!feas.ok) fail(ErrorCode::Infeasible, feas.explanation);
  const int ns = set.num_server_types();
  std::vector<double> q_occ(static_cast<std::size_t>(ns), 0.0);
  for (std::size_t p = 0; p < nz.size(); ++p) {
    q_occ[static_cast<std::size_t>(set.server_type(nz[p]))] += q[p];
  }
  double excess = 0.0;
  for (int s = 0; s < ns; ++s) {
    const auto us = static_cast<std::size_t>(s);
    excess = std::max(excess, q_occ[us] - model.h()[us] + feas.slack);
  }
  const double theta = excess > 0.0 ? std::min(0.5, 0.5 * feas.slack / excess) : 0.5;
  Eigen::VectorXd out(static_cast<Eigen::Index>(set.size_bar()));
  std::vector<double> occupied(static_cast<std::size_t>(ns), 0.0);
  for (std::size_t p = 0; p < nz.size(); ++p) {
    const double v = (1.0 - theta) * feas.witness[p] + theta * q[p];
    out(static_cast<Eigen::Index>(nz[p])) = v;
    occupied[static_cast<std::size_t>(set.server_type(nz[p]))] += v;
  }
  for (int s = 0; s < ns; ++s) {
    const auto us = static_cast<std::size_t>(s);
    out(static_cast<Eigen::Index>(set.zero(s))) = model.h()[us] - occupied[us];
  }
  return out;
}

GradientResult minimize_lyapunov(const FluidSystem& system, int max_iterations,
                                 double tolerance) {
  const Polytope poly = feasible_polytope(system);
  Eigen::VectorXd x = interior_point(system);
  GradientResult res;
  double step = 1.0;
  double value = objective(system, x);
  for (int iter = 0; iter < max_iterations; ++iter) {
    res.iterations = iter;
    const Eigen::VectorXd g = gradient(system, x);
    const Eigen::MatrixXd M = poly.C * x.asDiagonal();
    const Eigen::VectorXd dg = x.cwiseProduct(g);
    const Eigen::VectorXd lambda = (M * M.transpose()).ldlt().solve(M * dg);
    const Eigen::VectorXd p = dg - M.transpose() * lambda;
    res.projected_gradient = p.lpNorm<Eigen::Infinity>();
    if (res.projected_gradient < tolerance) break;
    const Eigen::VectorXd dir = -x.cwiseProduct(p);
    double limit = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (dir(j) < 0.0) limit = std::min(limit, -x(j) / dir(j));
    }
    double t = std::min(2.0 * step, 0.9 * limit);
    const double slope = -p.squaredNorm();
    bool moved = false;
    while (t > 1e-30) {
      const Eigen::VectorXd trial = x + t * dir;
      const double v = objective(system, trial);
      if (v <= value + 1e-4 * t * slope) {
        x = trial;
        value = v;
        step = t;
        moved = true;
        break;
      }
      t /= 2.0;
    }
    if (!moved) break;
    // Remove drift off the affine constraints.
    const Eigen::VectorXd r = poly.C * x - poly.d;
    x -= poly.C.transpose() * (poly.C * poly.C.transpose()).ldlt().solve(r);
  }
  res.x = x;
  return res;
}

std::vector<Eigen::VectorXd> hit_and_run(const FluidSystem& system, const Eigen::VectorXd& start,
                                         std::size_t count, std::uint64_t seed,
                                         std::size_t thinning) {
  const Polytope poly = feasible_polytope(system);
  if (start.size() != poly.C.cols() || start.minCoeff() <= 0.0) {
    fail(ErrorCode::InvalidArgument, "hit_and_run needs a strictly positive feasible start");
  }
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(poly.C);
  const Eigen::MatrixXd kernel = lu.kernel();
  std::vector<Eigen::VectorXd> out;
  if (lu.rank() == poly.C.cols()) {
    out.assign(count, start);
    return out;
  }
  const Eigen::MatrixXd basis = kernel.householderQr().householderQ() *
                                Eigen::MatrixXd::Identity(kernel.rows(), kernel.cols());
  StreamRng rng(seed, Stream::Perturbation);
  Eigen::VectorXd x = start;
  const std::size_t burn_in = 20 * thinning;
  for (std::size_t step = 0; out.size() < count; ++step) {
    Eigen::VectorXd z(basis.cols());
    for (Eigen::Index j = 0; j < z.size(); ++j) z(j) = rng.next_normal();
    Eigen::VectorXd u = basis * z;
    u.normalize();
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < x.size(); ++j) {
      if (u(j) > 1e-15) lo = std::max(lo, -x(j) / u(j));
      if (u(j) < -1e-15) hi = std::min(hi, -x(j) / u(j));
    }
    const double w = rng.next_uniform();
    const double t = lo + (hi - lo) * (0.001 + 0.998 * w);
    x += t * u;
    if (step >= burn_in && (step - burn_in) % thinning == 0) out.push_back(x);
  }
  return out;
}

std::vector<double> to_state(const FluidSystem& system, const Eigen::VectorXd& point) {
  const auto& set = system.model().configs();
  if (system.mode() == FluidMode::Infinite) return {point.data(), point.data() + point.size()};
  std::vector<double> out;
  for (std::size_t bar : set.nonzero()) out.push_back(point(static_cast<Eigen::Index>(bar)));
  return out;
}

double chain_rule_drift(const FluidSystem& system, std::span<const double> x) {
  const auto& set = system.model().configs();
  const FluidState st = system.evaluate(x);
  const FluidRhs rhs = system.rhs(x);
  auto f = [&](std::size_t bar) {
    const bool zero = set.is_zero(bar);
    if (system.mode() == FluidMode::Infinite) {
      if (zero) return 0.0;
      return std::log(st.xbar[bar]) + set.log_factorial_product(bar) -
             std::log(system.a()[static_cast<std::size_t>(set.server_type(bar))]);
    }
    return std::log(st.xbar[bar]) + set.log_factorial_product(bar);
  };
  const auto edges = set.edges();
  double total = 0.0;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const double flux = rhs.rates.v[e] - rhs.rates.w[e];
    total += flux * (f(edges[e].config) - f(edges[e].source));
  }
  return total;
}

}  // namespace grand::oracle
