#pragma once

#include <optional>

#include "maxdiv/risk.hpp"
#include "maxdiv/solver.hpp"

namespace maxdiv::optimizer {

using risk::RiskSpec;
using scenarios::ScenarioMatrix;

/// How the target-return constraint is chosen. Fraction(f) resolves to
/// eta_min + f * (eta_max - eta_min) using the bounds of the family being
/// solved; Absolute passes eta through unchanged.
struct TargetPolicy {
  enum class Mode { Unconstrained, Fraction, Absolute };
  Mode mode = Mode::Unconstrained;
  double value = 0.0;

  static TargetPolicy unconstrained() { return {Mode::Unconstrained, 0.0}; }
  static TargetPolicy fraction(double f);
  static TargetPolicy absolute(double eta) { return {Mode::Absolute, eta}; }
};

enum class Family { DR, MinRisk };

/// A positive asset risk is a precondition of the fractional transform.
class SchaiblePositivityError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The requested return target exceeds what any feasible portfolio attains.
class InfeasibleTargetError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverFailureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct OptimizationOutcome {
  risk::Portfolio portfolio;
  Eigen::VectorXd raw_solution;        // y for DR problems, x for min-risk
  double achieved_risk = 0.0;          // rho at the normalized portfolio
  double achieved_return = 0.0;        // mu' x
  std::optional<double> achieved_dr;   // present for DR solves
  double normalization_residual = 0.0; // |sum_i y_i rho_i - 1|, DR solves
  std::optional<double> eta;           // resolved target, when one applied
  solver::SolveStatus status = solver::SolveStatus::NumericalFailure;
  double solver_objective = 0.0;       // raw objective of the math program
  double kkt_residual = 0.0;
  int iterations = 0;
};

/// Fractional-transform program for max-DR: minimize rho(y) subject to
/// sum_i y_i rho_i = 1, the optional return row sum_i (mu_i - eta) y_i >= 0,
/// and y >= 0. Variable layouts:
///   volatility: y (n), quadratic objective y' Sigma y
///   MAD:        y (n) + d (T) free, objective (1/T) sum d
///   CVaR:       y (n) + d (T) + free zeta, objective zeta + (1/j) sum d
///   expectile:  y (n) + d+ (T) + d- (T) + free zeta, objective zeta,
///               with the balance row alpha sum d+ = (1-alpha) sum d-
/// The CVaR tail weight uses the effective level j/T, j = round(eps T), so
/// the program optimum coincides with the measured tail average.
/// Throws SchaiblePositivityError when any asset risk is nonpositive.
solver::MathProgram build_dr_problem(const ScenarioMatrix& s, const RiskSpec& spec,
                                     std::optional<double> eta);

/// Direct simplex-domain program: minimize rho(x) subject to sum x = 1,
/// mu'x >= eta (optional), x >= 0; linearized exactly like its DR
/// counterpart for the non-quadratic measures.
solver::MathProgram build_minrisk_problem(const ScenarioMatrix& s, const RiskSpec& spec,
                                          std::optional<double> eta);

OptimizationOutcome solve_dr(const ScenarioMatrix& s, const RiskSpec& spec,
                             const TargetPolicy& policy);
OptimizationOutcome solve_minrisk(const ScenarioMatrix& s, const RiskSpec& spec,
                                  const TargetPolicy& policy);

/// eta_min is the expected return of the unconstrained solution of the given
/// family; eta_max = max_i mu_i.
std::pair<double, double> eta_bounds(const ScenarioMatrix& s, const RiskSpec& spec,
                                     Family family);

struct FrontierPoint {
  double eta = 0.0;
  bool feasible = false;
  std::string note;
  std::optional<OptimizationOutcome> outcome;
};

/// K equally spaced targets on [eta_min, eta_max], both ends included.
/// Infeasible top-end points are flagged, never dropped.
std::vector<FrontierPoint> frontier(const ScenarioMatrix& s, const RiskSpec& spec,
                                    Family family, int grid_size);

}  // namespace maxdiv::optimizer
