#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace wbmc {

/// Strictly convex QP:
///   min 1/2 x^T H x + g^T x
///   s.t. A_eq x = b_eq, A_in x <= b_in, lb <= x <= ub.
/// Box bounds may be +/-infinity.
struct QpProblem {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  Eigen::VectorXd lb;
  Eigen::VectorXd ub;

  int num_vars() const { return static_cast<int>(g.size()); }

  /// Throws std::invalid_argument on dimension mismatch, asymmetric H
  /// (tol 1e-10) or lb > ub.
  void validate() const;

  /// Text dump: dimensions header, then matrices row-major.
  void dump(std::ostream& os) const;
};

enum class QpStatus { Optimal, Infeasible, MaxIter };

const char* to_string(QpStatus s);

struct QpSolution {
  Eigen::VectorXd x;
  QpStatus status = QpStatus::MaxIter;
  double kkt_residual = 0.0;
  /// Active inequality rows, indices into the stacked list
  /// [A_in rows, lower bounds, upper bounds].
  std::vector<int> active_set;
  Eigen::VectorXd eq_multipliers;  // nu, one per equality row
  Eigen::VectorXd in_multipliers;  // mu >= 0, one per stacked inequality row
  std::vector<double> objective_trace;
  int iterations = 0;

  double objective(const QpProblem& p) const {
    return 0.5 * x.dot(p.H * x) + p.g.dot(x);
  }
};

/// Dual active-set solver (Goldfarb-Idnani). Starts from the unconstrained
/// minimum and adds violated constraints until dual-primal optimality; reports
/// infeasible constraint sets honestly instead of approximating.
class QpSolver {
 public:
  explicit QpSolver(double tol = 1e-8, int max_iter = 200) : tol_(tol), max_iter_(max_iter) {}

  /// warm_start_hint: stacked inequality indices tried first when selecting
  /// the next violated constraint (typically last tick's active set).
  QpSolution solve(const QpProblem& p, std::span<const int> warm_start_hint = {}) const;

  double tol() const { return tol_; }

 private:
  double tol_;
  int max_iter_;
};

/// Max of stationarity, primal feasibility and complementarity residuals.
double kkt_residual(const QpProblem& p, const QpSolution& s);

}  // namespace wbmc
