#include "grand/simplex.hpp"

#include <cmath>

#include "grand/error.hpp"

namespace grand {

namespace {

// Rows 0..m-1 are constraints, row m the reduced costs; last column the rhs.
class Tableau {
 public:
  Tableau(Eigen::MatrixXd t, std::vector<std::size_t> basis, double tol, std::size_t max_iter)
      : t_(std::move(t)), basis_(std::move(basis)), tol_(tol), max_iter_(max_iter) {}

  Eigen::MatrixXd& data() { return t_; }
  std::vector<std::size_t>& basis() { return basis_; }
  std::size_t iterations() const { return iterations_; }
  Eigen::Index rows() const { return t_.rows() - 1; }
  Eigen::Index rhs_col() const { return t_.cols() - 1; }

  void pivot(Eigen::Index r, Eigen::Index col) {
    t_.row(r) /= t_(r, col);
    for (Eigen::Index i = 0; i < t_.rows(); ++i) {
      if (i != r && t_(i, col) != 0.0) t_.row(i) -= t_(i, col) * t_.row(r);
    }
    basis_[static_cast<std::size_t>(r)] = static_cast<std::size_t>(col);
  }

  // Minimizes over columns [0, allowed); returns false when unbounded.
  bool optimize(Eigen::Index allowed) {
    const Eigen::Index m = rows();
    while (true) {
      if (++iterations_ > max_iter_) {
        fail(ErrorCode::NoConvergence, "simplex exceeded its iteration limit");
      }
      Eigen::Index enter = -1;
      for (Eigen::Index j = 0; j < allowed; ++j) {
        if (t_(m, j) < -tol_) {
          enter = j;
          break;
        }
      }
      if (enter < 0) return true;
      Eigen::Index leave = -1;
      double best = 0.0;
      for (Eigen::Index i = 0; i < m; ++i) {
        const double a = t_(i, enter);
        if (a <= tol_) continue;
        const double ratio = t_(i, rhs_col()) / a;
        if (leave < 0 || ratio < best - tol_ ||
            (std::abs(ratio - best) <= tol_ &&
             basis_[static_cast<std::size_t>(i)] < basis_[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
      if (leave < 0) return false;
      pivot(leave, enter);
    }
  }

 private:
  Eigen::MatrixXd t_;
  std::vector<std::size_t> basis_;
  double tol_;
  std::size_t max_iter_;
  std::size_t iterations_ = 0;
};

}  // namespace

SimplexResult solve_simplex(const Eigen::MatrixXd& A_in, const Eigen::VectorXd& b_in,
                            const Eigen::VectorXd& c, const SimplexOptions& options) {
  const Eigen::Index m = A_in.rows();
  const Eigen::Index n = A_in.cols();
  if (b_in.size() != m || c.size() != n) {
    fail(ErrorCode::InvalidArgument, "simplex: inconsistent problem dimensions");
  }
  Eigen::MatrixXd A = A_in;
  Eigen::VectorXd b = b_in;
  Eigen::VectorXd sign = Eigen::VectorXd::Ones(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (b(i) < 0.0) {
      A.row(i) *= -1.0;
      b(i) *= -1.0;
      sign(i) = -1.0;
    }
  }

  // Phase 1 over [x, artificials].
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = A;
  t.block(0, n, m, m) = Eigen::MatrixXd::Identity(m, m);
  t.col(n + m).head(m) = b;
  std::vector<std::size_t> basis(static_cast<std::size_t>(m));
  for (Eigen::Index i = 0; i < m; ++i) {
    basis[static_cast<std::size_t>(i)] = static_cast<std::size_t>(n + i);
    t.row(m) -= t.row(i);
  }
  t.block(m, n, 1, m).setZero();
  Tableau tab(std::move(t), std::move(basis), options.tolerance, options.max_iterations);
  tab.optimize(n + m);

  SimplexResult result;
  const double infeasibility = -tab.data()(m, n + m);
  if (infeasibility > options.tolerance * std::max(1.0, b.lpNorm<1>())) {
    result.status = LpStatus::Infeasible;
    result.iterations = tab.iterations();
    return result;
  }

  // Drive artificials out of the basis; rows where that is impossible are redundant.
  std::vector<bool> keep(static_cast<std::size_t>(m), true);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (tab.basis()[static_cast<std::size_t>(i)] < static_cast<std::size_t>(n)) continue;
    Eigen::Index col = -1;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (std::abs(tab.data()(i, j)) > 1e-9) {
        col = j;
        break;
      }
    }
    if (col >= 0) {
      tab.pivot(i, col);
    } else {
      keep[static_cast<std::size_t>(i)] = false;
    }
  }

  // Phase 2: reduced costs of c over the current basis; artificial columns barred.
  Eigen::MatrixXd& d = tab.data();
  d.row(m).setZero();
  d.row(m).head(n) = c.transpose();
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!keep[static_cast<std::size_t>(i)]) continue;
    const std::size_t bj = tab.basis()[static_cast<std::size_t>(i)];
    const double cb = c(static_cast<Eigen::Index>(bj));
    if (cb != 0.0) d.row(m) -= cb * d.row(i);
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    if (!keep[static_cast<std::size_t>(i)]) d.row(i).setZero();
  }
  const bool bounded = tab.optimize(n);
  result.iterations = tab.iterations();
  if (!bounded) {
    result.status = LpStatus::Unbounded;
    return result;
  }

  // Recover x_B = B^{-1} b and y = c_B B^{-1} from the original data for accuracy.
  std::vector<Eigen::Index> rows_kept;
  for (Eigen::Index i = 0; i < m; ++i) {
    if (keep[static_cast<std::size_t>(i)]) rows_kept.push_back(i);
  }
  const auto mk = static_cast<Eigen::Index>(rows_kept.size());
  Eigen::MatrixXd B(mk, mk);
  Eigen::VectorXd bk(mk), cb(mk);
  for (Eigen::Index r = 0; r < mk; ++r) {
    const auto col = static_cast<Eigen::Index>(tab.basis()[static_cast<std::size_t>(rows_kept[static_cast<std::size_t>(r)])]);
    result.basis.push_back(static_cast<std::size_t>(col));
    cb(r) = c(col);
    for (Eigen::Index q = 0; q < mk; ++q) B(q, r) = A(rows_kept[static_cast<std::size_t>(q)], col);
    bk(r) = b(rows_kept[static_cast<std::size_t>(r)]);
  }
  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(B);
  const Eigen::VectorXd xb = lu.solve(bk);
  const Eigen::VectorXd yk = lu.transpose().solve(cb);
  result.x = Eigen::VectorXd::Zero(n);
  for (Eigen::Index r = 0; r < mk; ++r) {
    result.x(static_cast<Eigen::Index>(result.basis[static_cast<std::size_t>(r)])) = std::max(0.0, xb(r));
  }
  result.duals = Eigen::VectorXd::Zero(m);
  for (Eigen::Index r = 0; r < mk; ++r) {
    const Eigen::Index row = rows_kept[static_cast<std::size_t>(r)];
    result.duals(row) = sign(row) * yk(r);
  }
  result.value = c.dot(result.x);
  result.redundant_rows = static_cast<std::size_t>(m - mk);
  return result;
}

}  // namespace grand
