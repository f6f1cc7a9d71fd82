#include "wbmc/qp.hpp"

#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace wbmc {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::Optimal: return "optimal";
    case QpStatus::Infeasible: return "infeasible";
    case QpStatus::MaxIter: return "max_iter";
  }
  return "?";
}

void QpProblem::validate() const {
  const int n = num_vars();
  if (H.rows() != n || H.cols() != n) throw std::invalid_argument("QpProblem: H must be n x n");
  if ((H - H.transpose()).cwiseAbs().maxCoeff() > 1e-10) {
    throw std::invalid_argument("QpProblem: H is not symmetric");
  }
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n)) {
    throw std::invalid_argument("QpProblem: equality block dimensions inconsistent");
  }
  if (A_in.rows() != b_in.size() || (A_in.rows() > 0 && A_in.cols() != n)) {
    throw std::invalid_argument("QpProblem: inequality block dimensions inconsistent");
  }
  if (lb.size() != n || ub.size() != n) {
    throw std::invalid_argument("QpProblem: box bound dimensions inconsistent");
  }
  for (int i = 0; i < n; ++i) {
    if (lb[i] > ub[i]) throw std::invalid_argument("QpProblem: lb > ub");
  }
}

void QpProblem::dump(std::ostream& os) const {
  auto write_matrix = [&os](const char* name, const Eigen::MatrixXd& M) {
    os << name << " " << M.rows() << " " << M.cols() << "\n";
    for (Eigen::Index r = 0; r < M.rows(); ++r) {
      for (Eigen::Index c = 0; c < M.cols(); ++c) {
        os << M(r, c) << (c + 1 == M.cols() ? "" : " ");
      }
      os << "\n";
    }
  };
  os.precision(17);
  os << "qp_problem n=" << num_vars() << " n_eq=" << A_eq.rows() << " n_in=" << A_in.rows()
     << "\n";
  write_matrix("H", H);
  write_matrix("g", g.transpose());
  write_matrix("A_eq", A_eq);
  write_matrix("b_eq", b_eq.transpose());
  write_matrix("A_in", A_in);
  write_matrix("b_in", b_in.transpose());
  write_matrix("lb", lb.transpose());
  write_matrix("ub", ub.transpose());
}

namespace {

/// Stacked inequality rows in "c^T x >= d" orientation (the solver-internal
/// form); user rows a^T x <= b map to c = -a, d = -b.
struct Stacked {
  Eigen::MatrixXd C;  // n x m, columns are constraint normals
  Eigen::VectorXd d;
};

Stacked stack_inequalities(const QpProblem& p) {
  const int n = p.num_vars();
  std::vector<std::pair<Eigen::VectorXd, double>> rows;
  for (Eigen::Index i = 0; i < p.A_in.rows(); ++i) {
    rows.emplace_back(-p.A_in.row(i).transpose(), -p.b_in[i]);
  }
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = 1.0;
    rows.emplace_back(e, std::isinf(p.lb[j]) ? -kInf : p.lb[j]);
  }
  for (int j = 0; j < n; ++j) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[j] = -1.0;
    rows.emplace_back(e, std::isinf(p.ub[j]) ? -kInf : -p.ub[j]);
  }
  Stacked s;
  s.C.resize(n, static_cast<Eigen::Index>(rows.size()));
  s.d.resize(static_cast<Eigen::Index>(rows.size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    s.C.col(static_cast<Eigen::Index>(i)) = rows[i].first;
    s.d[static_cast<Eigen::Index>(i)] = rows[i].second;
  }
  return s;
}

}  // namespace

QpSolution QpSolver::solve(const QpProblem& p, std::span<const int> warm_start_hint) const {
  p.validate();
  const int n = p.num_vars();
  const int n_eq = static_cast<int>(p.A_eq.rows());

  Eigen::LLT<Eigen::MatrixXd> llt(p.H);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("QpSolver: H is not positive definite");
  }

  const Stacked ineq = stack_inequalities(p);
  const int m = static_cast<int>(ineq.d.size());

  QpSolution sol;
  sol.x = -llt.solve(p.g);
  sol.eq_multipliers = Eigen::VectorXd::Zero(n_eq);
  sol.in_multipliers = Eigen::VectorXd::Zero(m);

  double f = 0.5 * p.g.dot(sol.x);
  sol.objective_trace.push_back(f);

  // Active constraint normals: equalities first, then added inequalities.
  Eigen::MatrixXd N(n, 0);
  std::vector<int> active;     // stacked inequality index per non-equality column
  Eigen::VectorXd u(0);        // multipliers aligned with N's columns

  const double scale = std::max(1.0, p.H.cwiseAbs().maxCoeff());
  const double z_eps = 1e-11 * scale;

  auto step_directions = [&](const Eigen::VectorXd& np, Eigen::VectorXd& z, Eigen::VectorXd& r) {
    const Eigen::VectorXd hn = llt.solve(np);
    if (N.cols() == 0) {
      z = hn;
      r.resize(0);
      return;
    }
    const Eigen::MatrixXd HinvN = llt.solve(N);
    const Eigen::MatrixXd M = N.transpose() * HinvN;
    r = M.colPivHouseholderQr().solve(N.transpose() * hn);
    z = hn - HinvN * r;
  };

  auto append_active = [&](const Eigen::VectorXd& np, double u_new, int stacked_index) {
    N.conservativeResize(Eigen::NoChange, N.cols() + 1);
    N.col(N.cols() - 1) = np;
    u.conservativeResize(u.size() + 1);
    u[u.size() - 1] = u_new;
    if (stacked_index >= 0) active.push_back(stacked_index);
  };

  auto finish = [&](QpStatus status) {
    sol.status = status;
    for (int i = 0; i < static_cast<int>(active.size()); ++i) {
      sol.in_multipliers[active[i]] = u[n_eq + i];
    }
    // Equality multipliers with the sign convention
    // H x + g + A_eq^T nu + A_in^T mu = 0.
    for (int e = 0; e < n_eq; ++e) sol.eq_multipliers[e] = -u[e];
    sol.active_set = active;
    sol.kkt_residual = kkt_residual(p, sol);
    if (status == QpStatus::Optimal && sol.kkt_residual > tol_) {
      sol.status = QpStatus::MaxIter;  // numerically not certified
    }
    return sol;
  };

  // Add equality constraints unconditionally.
  for (int e = 0; e < n_eq; ++e) {
    const Eigen::VectorXd np = p.A_eq.row(e).transpose();
    Eigen::VectorXd z, r;
    step_directions(np, z, r);
    const double s = p.b_eq[e] - np.dot(sol.x);
    if (z.lpNorm<Eigen::Infinity>() < z_eps) {
      if (std::abs(s) > std::max(tol_, 1e-9)) return finish(QpStatus::Infeasible);
      append_active(np, 0.0, -1);  // dependent but consistent row
      continue;
    }
    const double t = s / z.dot(np);
    sol.x += t * z;
    for (Eigen::Index k = 0; k < u.size(); ++k) u[k] -= t * r[k];
    f += 0.5 * t * t * z.dot(np);
    append_active(np, t, -1);
    sol.objective_trace.push_back(f);
  }

  auto slack = [&](int i) { return ineq.C.col(i).dot(sol.x) - ineq.d[i]; };

  int iter = 0;
  while (true) {
    if (++iter > max_iter_) return finish(QpStatus::MaxIter);
    sol.iterations = iter;

    // Step 1: pick a violated constraint; warm-start hints get priority.
    auto is_active = [&](int i) {
      return std::find(active.begin(), active.end(), i) != active.end();
    };
    int ip = -1;
    double worst = -tol_;
    for (int i : warm_start_hint) {
      if (i < 0 || i >= m || is_active(i)) continue;
      const double s = slack(i);
      if (s < worst) {
        worst = s;
        ip = i;
      }
    }
    if (ip < 0) {
      for (int i = 0; i < m; ++i) {
        if (std::isinf(ineq.d[i]) || is_active(i)) continue;
        const double s = slack(i);
        if (s < worst) {
          worst = s;
          ip = i;
        }
      }
    }
    if (ip < 0) return finish(QpStatus::Optimal);

    const Eigen::VectorXd np = ineq.C.col(ip);
    double u_plus = 0.0;

    // Inner loop: step towards feasibility of constraint ip, dropping active
    // constraints whose multipliers would turn negative.
    while (true) {
      if (++iter > max_iter_) return finish(QpStatus::MaxIter);
      Eigen::VectorXd z, r;
      step_directions(np, z, r);

      double t1 = kInf;
      int drop = -1;
      for (int k = n_eq; k < static_cast<int>(u.size()); ++k) {
        if (r.size() > k && r[k] > z_eps && u[k] / r[k] < t1) {
          t1 = u[k] / r[k];
          drop = k;
        }
      }
      double t2 = kInf;
      const double znorm = z.lpNorm<Eigen::Infinity>();
      if (znorm > z_eps) t2 = -slack(ip) / z.dot(np);

      const double t = std::min(t1, t2);
      if (std::isinf(t)) return finish(QpStatus::Infeasible);

      if (std::isinf(t2)) {
        // Dual-only step.
        for (Eigen::Index k = 0; k < u.size(); ++k) u[k] -= t * r[k];
        u_plus += t;
      } else {
        sol.x += t * z;
        f += t * z.dot(np) * (0.5 * t + u_plus);
        for (Eigen::Index k = 0; k < u.size(); ++k) u[k] -= t * r[k];
        u_plus += t;
        sol.objective_trace.push_back(f);
      }

      if (!std::isinf(t2) && std::abs(t - t2) < 1e-14 * (1.0 + std::abs(t2))) {
        append_active(np, u_plus, ip);
        break;  // constraint satisfied, back to step 1
      }

      // Partial or dual step: remove the blocking constraint.
      const int active_pos = drop - n_eq;
      active.erase(active.begin() + active_pos);
      for (int k = drop; k + 1 < static_cast<int>(u.size()); ++k) {
        u[k] = u[k + 1];
        N.col(k) = N.col(k + 1);
      }
      u.conservativeResize(u.size() - 1);
      N.conservativeResize(Eigen::NoChange, N.cols() - 1);
    }
  }
}

double kkt_residual(const QpProblem& p, const QpSolution& s) {
  const int n = p.num_vars();
  Eigen::VectorXd grad = p.H * s.x + p.g;
  if (p.A_eq.rows() > 0) grad += p.A_eq.transpose() * s.eq_multipliers;

  double primal = 0.0;
  double compl_res = 0.0;
  const int n_general = static_cast<int>(p.A_in.rows());
  for (int i = 0; i < static_cast<int>(s.in_multipliers.size()); ++i) {
    Eigen::VectorXd a;
    double b;
    if (i < n_general) {
      a = p.A_in.row(i).transpose();
      b = p.b_in[i];
    } else if (i < n_general + n) {
      const int j = i - n_general;
      if (std::isinf(p.lb[j])) continue;
      a = Eigen::VectorXd::Zero(n);
      a[j] = -1.0;
      b = -p.lb[j];
    } else {
      const int j = i - n_general - n;
      if (std::isinf(p.ub[j])) continue;
      a = Eigen::VectorXd::Zero(n);
      a[j] = 1.0;
      b = p.ub[j];
    }
    const double mu = s.in_multipliers[i];
    const double viol = a.dot(s.x) - b;
    grad += mu * a;
    primal = std::max(primal, viol);
    compl_res = std::max(compl_res, std::abs(mu * viol));
  }
  if (p.A_eq.rows() > 0) {
    primal = std::max(primal, (p.A_eq * s.x - p.b_eq).cwiseAbs().maxCoeff());
  }
  for (int j = 0; j < n; ++j) {
    if (!std::isinf(p.lb[j])) primal = std::max(primal, p.lb[j] - s.x[j]);
    if (!std::isinf(p.ub[j])) primal = std::max(primal, s.x[j] - p.ub[j]);
  }
  return std::max({grad.cwiseAbs().maxCoeff(), primal, compl_res});
}

}  // namespace wbmc
