#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace maxdiv::solver {

/// Language-neutral LP/QP container.
///
/// Objective: minimize 1/2 v'Qv + c'v  (Q optional; omit it for an LP).
/// Constraints: eq_mat v = eq_rhs, ineq_mat v >= ineq_rhs, and v_i >= lower
/// bound for every variable not listed in free_vars. Lower bounds default
/// to 0 when the vector is left empty.
struct MathProgram {
  std::optional<Eigen::MatrixXd> quad;  // n_v x n_v, symmetric PSD
  Eigen::VectorXd linear;               // n_v

  Eigen::MatrixXd eq_mat;   // m_e x n_v
  Eigen::VectorXd eq_rhs;   // m_e
  Eigen::MatrixXd ineq_mat; // m_i x n_v, rows mean a'v >= b
  Eigen::VectorXd ineq_rhs; // m_i

  Eigen::VectorXd lower_bounds;        // n_v or empty (treated as all-zero)
  std::vector<Eigen::Index> free_vars; // exempt from lower bounds

  Eigen::Index variables() const { return linear.size(); }

  /// Throws std::invalid_argument on inconsistent dimensions or an
  /// asymmetric Q (tolerance 1e-12).
  void validate() const;
};

enum class SolveStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

const char* to_string(SolveStatus s);

struct SolveResult {
  SolveStatus status = SolveStatus::NumericalFailure;
  Eigen::VectorXd v;           // primal solution (meaningful when Optimal)
  double objective = 0.0;      // 1/2 v'Qv + c'v at v
  double kkt_residual = 0.0;   // max of primal/dual/complementarity residuals
  int iterations = 0;
  std::string message;
};

/// Deterministic dense-input convex solver: a primal-dual interior-point
/// method (Mehrotra predictor-corrector) over a sparse factorization of the
/// KKT system, followed by an active-set polish that snaps clean solutions
/// to machine precision. Iteration cap 200; exceeding it yields
/// NumericalFailure rather than a silent suboptimal answer. Infeasibility is
/// certified with an elastic phase-1 LP, never guessed from divergence alone.
SolveResult solve(const MathProgram& p);

/// Plain-text dump (objective, constraint rows) for external cross-checks.
std::string to_debug_string(const MathProgram& p);

}  // namespace maxdiv::solver
