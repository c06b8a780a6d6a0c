#include "grand/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <sstream>
#include <thread>

#include <Eigen/Dense>

#include "grand/error.hpp"
#include "grand/simplex.hpp"

namespace grand {

namespace {

// Minimizes G(theta) = sum_k exp(offset_k + phi_k . theta) - target . theta.
// G is smooth and strictly convex when the phi_k span the parameter space.
struct ExpDual {
  Eigen::MatrixXd phi;     // one row per term
  Eigen::VectorXd offset;
  Eigen::VectorXd target;

  Eigen::VectorXd log_terms(const Eigen::VectorXd& theta) const { return offset + phi * theta; }

  double objective(const Eigen::VectorXd& theta) const {
    return log_terms(theta).array().exp().sum() - target.dot(theta);
  }
};

struct DualResult {
  Eigen::VectorXd theta;
  Eigen::VectorXd terms;
  double residual = 0.0;
  int iterations = 0;
};

DualResult newton(const ExpDual& dual, Eigen::VectorXd theta, const NewtonOptions& options) {
  DualResult out;
  for (int iter = 0;; ++iter) {
    const Eigen::VectorXd w = dual.log_terms(theta).array().exp();
    const Eigen::VectorXd grad = dual.phi.transpose() * w - dual.target;
    const double residual = grad.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(residual)) {
      fail(ErrorCode::NoConvergence, "product-form Newton iteration overflowed");
    }
    if (residual < options.tolerance) {
      out.theta = std::move(theta);
      out.terms = w;
      out.residual = residual;
      out.iterations = iter;
      return out;
    }
    if (iter >= options.max_iterations) {
      std::ostringstream os;
      os << "product-form Newton iteration did not converge in " << options.max_iterations
         << " iterations (residual " << residual << ")";
      fail(ErrorCode::NoConvergence, os.str());
    }
    const Eigen::MatrixXd hess = dual.phi.transpose() * w.asDiagonal() * dual.phi;
    const Eigen::VectorXd step = -hess.ldlt().solve(grad);
    const double g0 = dual.objective(theta);
    const double slope = grad.dot(step);
    const double noise = 1e-13 * (std::abs(g0) + 1.0);
    double t = 1.0;
    while (true) {
      const Eigen::VectorXd trial = theta + t * step;
      const double g = dual.objective(trial);
      if (std::isfinite(g) && g <= g0 + 1e-4 * t * slope + noise) {
        theta = trial;
        break;
      }
      t /= 2.0;
      if (t < 1e-12) {
        std::ostringstream os;
        os << "product-form line search stalled (residual " << residual << ")";
        fail(ErrorCode::NoConvergence, os.str());
      }
    }
  }
}

Eigen::MatrixXd demand_matrix(const ConfigurationSet& set) {
  Eigen::MatrixXd A(set.num_types(), static_cast<Eigen::Index>(set.size()));
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    for (int i = 0; i < set.num_types(); ++i) {
      A(i, static_cast<Eigen::Index>(p)) = set.count(nz[p], i);
    }
  }
  return A;
}

Eigen::VectorXd to_eigen(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

std::vector<double> to_std(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

LpSolution finish_lp(const PackingModel& model, const SimplexResult& res) {
  if (res.status != LpStatus::Optimal) {
    fail(ErrorCode::Infeasible, "weighted server-count LP has no optimal solution");
  }
  const auto& set = model.configs();
  LpSolution out;
  out.x_star = to_std(res.x.head(static_cast<Eigen::Index>(set.size())));
  out.eta = to_std(res.duals.head(set.num_types()));
  out.value = weighted_cost(model, out.x_star);
  out.kkt = kkt_report(model, out.x_star, out.eta);
  return out;
}

}  // namespace

ProductFormSolution solve_product_form_infinite(const PackingModel& model,
                                                const std::vector<double>& a,
                                                const NewtonOptions& options) {
  const auto& set = model.configs();
  if (a.size() != static_cast<std::size_t>(set.num_server_types())) {
    fail(ErrorCode::InvalidArgument, "parameter vector a has the wrong length");
  }
  for (double v : a) {
    if (!(v > 0.0)) fail(ErrorCode::InvalidArgument, "a_s must be positive");
  }
  const auto nz = set.nonzero();
  const auto n = static_cast<Eigen::Index>(nz.size());
  ExpDual dual;
  dual.phi = demand_matrix(set).transpose();
  dual.offset.resize(n);
  for (Eigen::Index p = 0; p < n; ++p) {
    const std::size_t bar = nz[static_cast<std::size_t>(p)];
    dual.offset(p) = std::log(a[static_cast<std::size_t>(set.server_type(bar))]) -
                     set.log_factorial_product(bar);
  }
  dual.target = to_eigen(model.rho());
  const DualResult res = newton(dual, Eigen::VectorXd::Zero(set.num_types()), options);

  ProductFormSolution sol;
  sol.mode = FluidMode::Infinite;
  sol.x = to_std(res.terms);
  sol.nu = to_std(res.theta);
  sol.a = a;
  sol.xbar.assign(set.size_bar(), 0.0);
  for (std::size_t p = 0; p < nz.size(); ++p) sol.xbar[nz[p]] = sol.x[p];
  for (int s = 0; s < set.num_server_types(); ++s) sol.xbar[set.zero(s)] = a[static_cast<std::size_t>(s)];
  sol.residual = res.residual;
  sol.iterations = res.iterations;
  return sol;
}

ProductFormSolution solve_product_form_infinite(const PackingModel& model) {
  return solve_product_form_infinite(model, model.a());
}

ProductFormSolution solve_product_form_finite(const PackingModel& model,
                                              const NewtonOptions& options) {
  const FeasibilityReport feas = check_feasibility(model);
  if (!feas.ok) fail(ErrorCode::Infeasible, feas.explanation);
  const auto& set = model.configs();
  const int ni = set.num_types();
  const int ns = set.num_server_types();
  const auto nbar = static_cast<Eigen::Index>(set.size_bar());
  ExpDual dual;
  dual.phi = Eigen::MatrixXd::Zero(nbar, ni + ns);
  dual.offset.resize(nbar);
  for (Eigen::Index bar = 0; bar < nbar; ++bar) {
    const auto ub = static_cast<std::size_t>(bar);
    for (int i = 0; i < ni; ++i) dual.phi(bar, i) = set.count(ub, i);
    dual.phi(bar, ni + set.server_type(ub)) = -1.0;
    dual.offset(bar) = -set.log_factorial_product(ub);
  }
  const auto& h = model.h();
  dual.target.resize(ni + ns);
  for (int i = 0; i < ni; ++i) dual.target(i) = model.rho()[static_cast<std::size_t>(i)];
  for (int s = 0; s < ns; ++s) dual.target(ni + s) = -h[static_cast<std::size_t>(s)];

  // beta_s makes sum_{K-bar^s} x_k = h_s at nu = 0.
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(ni + ns);
  std::vector<double> inv_c(static_cast<std::size_t>(ns), 0.0);
  for (std::size_t bar = 0; bar < set.size_bar(); ++bar) {
    inv_c[static_cast<std::size_t>(set.server_type(bar))] += 1.0 / set.factorial_product(bar);
  }
  for (int s = 0; s < ns; ++s) {
    theta(ni + s) = std::log(inv_c[static_cast<std::size_t>(s)] / h[static_cast<std::size_t>(s)]);
  }
  const DualResult res = newton(dual, theta, options);

  ProductFormSolution sol;
  sol.mode = FluidMode::Finite;
  sol.xbar = to_std(res.terms);
  for (std::size_t bar : set.nonzero()) sol.x.push_back(sol.xbar[bar]);
  sol.nu = to_std(res.theta.head(ni));
  sol.beta = to_std(res.theta.tail(ns));
  for (double b : sol.beta) sol.a.push_back(std::exp(-b));
  sol.residual = res.residual;
  sol.iterations = res.iterations;
  return sol;
}

double weighted_cost(const PackingModel& model, const std::vector<double>& x) {
  const auto& set = model.configs();
  const auto nz = set.nonzero();
  double total = 0.0;
  for (std::size_t p = 0; p < nz.size(); ++p) {
    total += model.gamma()[static_cast<std::size_t>(set.server_type(nz[p]))] * x[p];
  }
  return total;
}

KktReport kkt_report(const PackingModel& model, const std::vector<double>& x,
                     const std::vector<double>& eta, double tolerance) {
  const auto& set = model.configs();
  const auto nz = set.nonzero();
  KktReport rep;
  rep.tolerance = tolerance;
  std::vector<double> y(static_cast<std::size_t>(set.num_types()), 0.0);
  for (std::size_t p = 0; p < nz.size(); ++p) {
    const std::size_t bar = nz[p];
    double load = 0.0;
    for (int i = 0; i < set.num_types(); ++i) {
      const auto ui = static_cast<std::size_t>(i);
      y[ui] += set.count(bar, i) * x[p];
      load += set.count(bar, i) * eta[ui];
    }
    const double reduced = model.gamma()[static_cast<std::size_t>(set.server_type(bar))] - load;
    rep.entries.push_back({bar, reduced, x[p]});
    rep.dual_violation = std::max(rep.dual_violation, -reduced);
    rep.slackness = std::max(rep.slackness, x[p] * std::max(0.0, reduced));
  }
  for (std::size_t i = 0; i < y.size(); ++i) {
    rep.primal_residual = std::max(rep.primal_residual, std::abs(y[i] - model.rho()[i]));
    rep.dual_negativity = std::max(rep.dual_negativity, -eta[i]);
  }
  return rep;
}

LpSolution solve_lp(const PackingModel& model) {
  const auto& set = model.configs();
  const Eigen::MatrixXd A = demand_matrix(set);
  Eigen::VectorXd c(static_cast<Eigen::Index>(set.size()));
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    c(static_cast<Eigen::Index>(p)) = model.gamma()[static_cast<std::size_t>(set.server_type(nz[p]))];
  }
  return finish_lp(model, solve_simplex(A, to_eigen(model.rho()), c));
}

LpSolution solve_lp_inequality(const PackingModel& model) {
  const auto& set = model.configs();
  const auto n = static_cast<Eigen::Index>(set.size());
  const int ni = set.num_types();
  Eigen::MatrixXd A(ni, n + ni);
  A << demand_matrix(set), -Eigen::MatrixXd::Identity(ni, ni);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + ni);
  const auto nz = set.nonzero();
  for (std::size_t p = 0; p < nz.size(); ++p) {
    c(static_cast<Eigen::Index>(p)) = model.gamma()[static_cast<std::size_t>(set.server_type(nz[p]))];
  }
  return finish_lp(model, solve_simplex(A, to_eigen(model.rho()), c));
}

FeasibilityReport check_feasibility(const PackingModel& model) {
  if (!model.has_pools()) fail(ErrorCode::InvalidArgument, "model has no pool sizes h");
  const auto& set = model.configs();
  const auto n = static_cast<Eigen::Index>(set.size());
  const int ni = set.num_types();
  const int ns = set.num_server_types();
  const auto& h = model.h();
  const auto nz = set.nonzero();

  // Columns: x (n), t, u (S). Rows: demand (I), pools (S).
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(ni + ns, n + 1 + ns);
  A.topLeftCorner(ni, n) = demand_matrix(set);
  Eigen::VectorXd b(ni + ns);
  b.head(ni) = to_eigen(model.rho());
  for (int s = 0; s < ns; ++s) {
    for (std::size_t p = 0; p < nz.size(); ++p) {
      if (set.server_type(nz[p]) == s) A(ni + s, static_cast<Eigen::Index>(p)) = 1.0;
    }
    A(ni + s, n) = 1.0;
    A(ni + s, n + 1 + s) = 1.0;
    b(ni + s) = h[static_cast<std::size_t>(s)];
  }
  Eigen::VectorXd c = Eigen::VectorXd::Zero(n + 1 + ns);
  c(n) = -1.0;
  const SimplexResult res = solve_simplex(A, b, c);

  FeasibilityReport rep;
  auto names = [&](const std::vector<int>& pools) {
    std::string out;
    for (int s : pools) {
      if (!out.empty()) out += ", ";
      out += model.server_names()[static_cast<std::size_t>(s)];
    }
    return out;
  };
  if (res.status == LpStatus::Infeasible) {
    // Locate the pools that must overflow: min total overflow o_s.
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(ni + ns, n + 2 * ns);
    B.topLeftCorner(ni, n) = A.topLeftCorner(ni, n);
    B.block(ni, 0, ns, n) = A.block(ni, 0, ns, n);
    B.block(ni, n, ns, ns) = -Eigen::MatrixXd::Identity(ns, ns);
    B.block(ni, n + ns, ns, ns) = Eigen::MatrixXd::Identity(ns, ns);
    Eigen::VectorXd cb = Eigen::VectorXd::Zero(n + 2 * ns);
    cb.segment(n, ns).setOnes();
    const SimplexResult over = solve_simplex(B, b, cb);
    for (int s = 0; s < ns; ++s) {
      if (over.status == LpStatus::Optimal && over.x(n + s) > 1e-9) rep.binding.push_back(s);
    }
    rep.empty = true;
    std::ostringstream os;
    os << "infeasible: the offered load does not fit into the server pools";
    if (!rep.binding.empty()) os << " (overflowing: " << names(rep.binding) << ")";
    rep.explanation = os.str();
    return rep;
  }
  rep.slack = res.x(n);
  rep.witness = to_std(res.x.head(n));
  for (int s = 0; s < ns; ++s) {
    if (res.x(n + 1 + s) <= 1e-9) rep.binding.push_back(s);
  }
  rep.ok = rep.slack > 1e-9;
  std::ostringstream os;
  if (rep.ok) {
    os << "ok: every pool can keep at least " << rep.slack << " idle servers per unit r";
  } else {
    os << "infeasible: every feasible packing fills pool " << names(rep.binding)
       << " completely";
  }
  rep.explanation = os.str();
  return rep;
}

AlphaSweep alpha_sweep(const PackingModel& model, const std::vector<double>& alphas,
                       int threads) {
  for (std::size_t j = 0; j < alphas.size(); ++j) {
    if (!(alphas[j] > 0.0 && alphas[j] < 1.0)) {
      fail(ErrorCode::InvalidArgument, "alpha values must lie in (0, 1)");
    }
    if (j > 0 && !(alphas[j] < alphas[j - 1])) {
      fail(ErrorCode::InvalidArgument, "alpha values must be strictly decreasing");
    }
  }
  AlphaSweep sweep;
  sweep.lp = solve_lp(model);
  sweep.rows.resize(alphas.size());
  const auto& set = model.configs();
  const auto nz = set.nonzero();

  auto compute = [&](std::size_t j) {
    const double alpha = alphas[j];
    std::vector<double> a;
    for (double g : model.gamma()) a.push_back(std::pow(alpha, g));
    const ProductFormSolution sol = solve_product_form_infinite(model, a);
    AlphaSweepRow row;
    row.alpha = alpha;
    row.x = sol.x;
    row.nu = sol.nu;
    row.cost = weighted_cost(model, sol.x);
    row.gap = row.cost - sweep.lp.value;
    const double b = -std::log(alpha);
    for (double v : sol.nu) {
      row.eta_hat.push_back(v / b);
      row.dual_negativity = std::max(row.dual_negativity, -v / b);
    }
    for (std::size_t p = 0; p < nz.size(); ++p) {
      double load = 0.0;
      for (int i = 0; i < set.num_types(); ++i) {
        load += set.count(nz[p], i) * row.eta_hat[static_cast<std::size_t>(i)];
      }
      const double reduced = model.gamma()[static_cast<std::size_t>(set.server_type(nz[p]))] - load;
      row.dual_violation = std::max(row.dual_violation, -reduced);
      row.slackness += sol.x[p] * std::max(0.0, reduced);
    }
    row.kkt_residual = row.dual_negativity + row.dual_violation + row.slackness;
    sweep.rows[j] = std::move(row);
  };

  const std::size_t workers =
      std::min<std::size_t>(alphas.size(), static_cast<std::size_t>(std::max(1, threads)));
  std::vector<std::exception_ptr> errors(alphas.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t j; (j = next.fetch_add(1)) < alphas.size();) {
      try {
        compute(j);
      } catch (...) {
        errors[j] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return sweep;
}

}  // namespace grand
