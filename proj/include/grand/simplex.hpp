#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace grand {

enum class LpStatus { Optimal, Infeasible, Unbounded };

// min c^T x subject to A x = b, x >= 0.
struct SimplexResult {
  LpStatus status = LpStatus::Optimal;
  Eigen::VectorXd x;
  double value = 0.0;
  // y^T A <= c at optimality; y = c_B B^{-1}. Redundant rows get 0.
  Eigen::VectorXd duals;
  std::vector<std::size_t> basis;  // column per retained row
  std::size_t iterations = 0;
  std::size_t redundant_rows = 0;
};

struct SimplexOptions {
  double tolerance = 1e-10;
  std::size_t max_iterations = 100000;
};

// Dense two-phase tableau simplex with Bland's anti-cycling rule.
SimplexResult solve_simplex(const Eigen::MatrixXd& A, const Eigen::VectorXd& b,
                            const Eigen::VectorXd& c, const SimplexOptions& options = {});

}  // namespace grand
