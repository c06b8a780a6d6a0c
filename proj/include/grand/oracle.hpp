#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "grand/fluid.hpp"
#include "grand/model.hpp"

// Reference computations that share no code path with the production
// solvers. Used by the acceptance suites and the unit tests.
namespace grand::oracle {

// Erlang loss probability B(n, A) by the stable recursion.
double erlang_b(int servers, double offered_load);

// Linear equality system C x = d whose nonnegative solutions are the
// feasible fluid points of `system`: over K (demand rows) in infinite mode,
// over K-bar (demand and pool rows) in finite mode.
struct Polytope {
  Eigen::MatrixXd C;
  Eigen::VectorXd d;
};
Polytope feasible_polytope(const FluidSystem& system);

// A point with every coordinate strictly positive (including idle pools in
// finite mode), in the same coordinates as feasible_polytope.
Eigen::VectorXd interior_point(const FluidSystem& system);

// Minimizes L^(a) over X or L-box over X-diamond by affine-scaled projected
// gradient descent with backtracking, in polytope coordinates.
struct GradientResult {
  Eigen::VectorXd x;
  int iterations = 0;
  double projected_gradient = 0.0;
};
GradientResult minimize_lyapunov(const FluidSystem& system, int max_iterations = 200000,
                                 double tolerance = 1e-13);

// Hit-and-run walk over the relative interior of the feasible polytope.
// `start` is in polytope coordinates and must be strictly positive.
std::vector<Eigen::VectorXd> hit_and_run(const FluidSystem& system, const Eigen::VectorXd& start,
                                         std::size_t count, std::uint64_t seed,
                                         std::size_t thinning = 10);

// Polytope coordinates -> state over K.
std::vector<double> to_state(const FluidSystem& system, const Eigen::VectorXd& point);

// d/dt L along the fluid dynamics by the chain rule over edges,
// sum_{(k,i)} (v_ki - w_ki) (dL/dx_k - dL/dx_{k-e_i}).
double chain_rule_drift(const FluidSystem& system, std::span<const double> x);

}  // namespace grand::oracle
