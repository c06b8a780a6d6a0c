#pragma once

#include <string>
#include <vector>

#include "grand/fluid.hpp"
#include "grand/model.hpp"

namespace grand {

struct NewtonOptions {
  double tolerance = 1e-10;  // max constraint residual
  int max_iterations = 200;
};

// Product-form equilibrium. Infinite mode: x_k = (a_s / c_k) exp(k . nu) on K.
// Finite mode: x_k = (e^{-beta_s} / c_k) exp(k . nu) on K-bar, and a = e^{-beta}.
struct ProductFormSolution {
  FluidMode mode = FluidMode::Infinite;
  std::vector<double> x;     // over K
  std::vector<double> xbar;  // over K-bar; zero configs hold a_s (infinite) or x_{0^s}
  std::vector<double> nu;
  std::vector<double> beta;  // finite mode only
  std::vector<double> a;
  double residual = 0.0;
  int iterations = 0;
};

ProductFormSolution solve_product_form_infinite(const PackingModel& model,
                                                const std::vector<double>& a,
                                                const NewtonOptions& options = {});
ProductFormSolution solve_product_form_infinite(const PackingModel& model);
// Throws Error(Infeasible) when no point of X-diamond keeps every pool partly idle.
ProductFormSolution solve_product_form_finite(const PackingModel& model,
                                              const NewtonOptions& options = {});

struct KktEntry {
  std::size_t config = 0;      // bar index
  double reduced_cost = 0.0;   // gamma_s - k . eta
  double x = 0.0;
};

struct KktReport {
  double primal_residual = 0.0;   // max_i |sum_k k_i x_k - rho_i|
  double dual_negativity = 0.0;   // max_i (-eta_i)_+
  double dual_violation = 0.0;    // max_k (k . eta - gamma_s)_+
  double slackness = 0.0;         // max_k x_k (gamma_s - k . eta)_+
  double tolerance = 1e-9;
  std::vector<KktEntry> entries;  // over K
  bool ok() const {
    return primal_residual <= tolerance && dual_negativity <= tolerance &&
           dual_violation <= tolerance && slackness <= tolerance;
  }
};

KktReport kkt_report(const PackingModel& model, const std::vector<double>& x,
                     const std::vector<double>& eta, double tolerance = 1e-9);

struct LpSolution {
  std::vector<double> x_star;  // over K
  double value = 0.0;          // sum_s gamma_s sum_{K^s} x_k
  std::vector<double> eta;
  KktReport kkt;
};

// min sum gamma_s x_k subject to sum_k k_i x_k = rho_i, x >= 0.
LpSolution solve_lp(const PackingModel& model);
// Same objective with sum_k k_i x_k >= rho_i.
LpSolution solve_lp_inequality(const PackingModel& model);

double weighted_cost(const PackingModel& model, const std::vector<double>& x);

struct FeasibilityReport {
  bool ok = false;
  bool empty = false;          // X-diamond itself is empty
  double slack = 0.0;          // max over X-diamond of min_s x_{0^s}
  std::vector<int> binding;    // server types whose idle pool attains the minimum
  std::vector<double> witness; // maximizer over K (empty when X-diamond is empty)
  std::string explanation;
};

FeasibilityReport check_feasibility(const PackingModel& model);

struct AlphaSweepRow {
  double alpha = 0.0;
  std::vector<double> x;
  std::vector<double> nu;
  double cost = 0.0;
  std::vector<double> eta_hat;  // nu / (-log alpha)
  double gap = 0.0;             // cost - LP value
  double dual_negativity = 0.0;
  double dual_violation = 0.0;
  double slackness = 0.0;       // sum_k x_k (gamma_s - k . eta_hat)_+
  double kkt_residual = 0.0;    // sum of the three above
};

struct AlphaSweep {
  LpSolution lp;
  std::vector<AlphaSweepRow> rows;
};

// a_s = alpha^{gamma_s} for each alpha; alphas must lie in (0, 1), strictly decreasing.
AlphaSweep alpha_sweep(const PackingModel& model, const std::vector<double>& alphas,
                       int threads = 1);

}  // namespace grand
