#include "maxdiv/optimizer.hpp"

#include <cmath>

#include "maxdiv/diversification.hpp"

namespace maxdiv::optimizer {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using solver::MathProgram;

// The analytic optimum at eta = eta_max sits exactly on the return
// constraint; this slack only absorbs solver round-off.
constexpr double kReturnRelaxation = 1e-9;

void check_schaible_positivity(const VectorXd& rho) {
  // An asset risk many orders of magnitude below the largest one is a
  // numerically constant asset; the normalization row would be meaningless.
  const double floor = 1e-10 * std::max(rho.maxCoeff(), 0.0);
  if (!(rho.minCoeff() > floor))
    throw SchaiblePositivityError("Schaible transform requires positive asset risks");
}

// Appends the return row. DR form: sum_i (mu_i - eta) y_i >= 0 (linear in y,
// exactly as the transformed problem states it). Min-risk form: mu'x >= eta.
void add_return_row(MathProgram& p, const VectorXd& mu, double eta, bool dr_form) {
  const Index n_v = p.variables();
  const Index r = p.ineq_mat.rows();
  p.ineq_mat.conservativeResize(r + 1, n_v);
  p.ineq_rhs.conservativeResize(r + 1);
  p.ineq_mat.row(r).setZero();
  const double eta_eff = eta - kReturnRelaxation;
  if (dr_form) {
    for (Index i = 0; i < mu.size(); ++i) p.ineq_mat(r, i) = mu[i] - eta_eff;
    p.ineq_rhs[r] = 0.0;
  } else {
    for (Index i = 0; i < mu.size(); ++i) p.ineq_mat(r, i) = mu[i];
    p.ineq_rhs[r] = eta_eff;
  }
}

// Shared LP structure of the scenario-based measures. `weight_row` holds the
// coefficients of the single normalization/budget equality on the first n
// variables.
MathProgram build_measure_program(const ScenarioMatrix& s, const RiskSpec& spec,
                                  const VectorXd& weight_row) {
  const Index n = s.assets();
  const Index t_obs = s.observations();
  const VectorXd mu = scenarios::mean_returns(s);
  MathProgram p;

  switch (spec.kind) {
    case risk::Measure::Volatility: {
      p.linear = VectorXd::Zero(n);
      p.quad = (2.0 * scenarios::covariance(s)).eval();  // 1/2 v'Qv = y'Sigma y
      p.eq_mat = weight_row.transpose();
      p.eq_rhs = VectorXd::Ones(1);
      p.ineq_mat.resize(0, n);
      p.ineq_rhs.resize(0);
      break;
    }
    case risk::Measure::MAD: {
      const Index n_v = n + t_obs;
      p.linear = VectorXd::Zero(n_v);
      p.linear.segment(n, t_obs).setConstant(1.0 / static_cast<double>(t_obs));
      p.eq_mat = MatrixXd::Zero(1, n_v);
      p.eq_mat.row(0).head(n) = weight_row;
      p.eq_rhs = VectorXd::Ones(1);
      // d_t >= +/- sum_i (r_it - mu_i) y_i, written as two >= rows each.
      p.ineq_mat = MatrixXd::Zero(2 * t_obs, n_v);
      p.ineq_rhs = VectorXd::Zero(2 * t_obs);
      for (Index t = 0; t < t_obs; ++t) {
        for (Index i = 0; i < n; ++i) {
          const double dev = s.returns(t, i) - mu[i];
          p.ineq_mat(2 * t, i) = -dev;
          p.ineq_mat(2 * t + 1, i) = dev;
        }
        p.ineq_mat(2 * t, n + t) = 1.0;
        p.ineq_mat(2 * t + 1, n + t) = 1.0;
      }
      // The deviation variables carry no sign of their own.
      for (Index t = 0; t < t_obs; ++t) p.free_vars.push_back(n + t);
      break;
    }
    case risk::Measure::CVaR: {
      const Index j = risk::tail_count(spec.epsilon, t_obs);
      const Index n_v = n + t_obs + 1;  // y, d, zeta
      p.linear = VectorXd::Zero(n_v);
      p.linear.segment(n, t_obs).setConstant(1.0 / static_cast<double>(j));
      p.linear[n + t_obs] = 1.0;
      p.eq_mat = MatrixXd::Zero(1, n_v);
      p.eq_mat.row(0).head(n) = weight_row;
      p.eq_rhs = VectorXd::Ones(1);
      // d_t + sum_i r_it y_i + zeta >= 0
      p.ineq_mat = MatrixXd::Zero(t_obs, n_v);
      p.ineq_rhs = VectorXd::Zero(t_obs);
      for (Index t = 0; t < t_obs; ++t) {
        p.ineq_mat.row(t).head(n) = s.returns.row(t);
        p.ineq_mat(t, n + t) = 1.0;
        p.ineq_mat(t, n + t_obs) = 1.0;
      }
      p.free_vars.push_back(n + t_obs);
      break;
    }
    case risk::Measure::Expectile: {
      const double alpha = spec.alpha;
      const Index n_v = n + 2 * t_obs + 1;  // y, d+, d-, zeta
      p.linear = VectorXd::Zero(n_v);
      p.linear[n + 2 * t_obs] = 1.0;
      // Rows: balance, T linking equalities, then the normalization.
      p.eq_mat = MatrixXd::Zero(t_obs + 2, n_v);
      p.eq_rhs = VectorXd::Zero(t_obs + 2);
      p.eq_mat.row(0).segment(n, t_obs).setConstant(alpha);
      p.eq_mat.row(0).segment(n + t_obs, t_obs).setConstant(-(1.0 - alpha));
      for (Index t = 0; t < t_obs; ++t) {
        // -sum_i y_i r_it - zeta = d+_t - d-_t
        p.eq_mat.row(1 + t).head(n) = -s.returns.row(t);
        p.eq_mat(1 + t, n + 2 * t_obs) = -1.0;
        p.eq_mat(1 + t, n + t) = -1.0;
        p.eq_mat(1 + t, n + t_obs + t) = 1.0;
      }
      p.eq_mat.row(t_obs + 1).head(n) = weight_row;
      p.eq_rhs[t_obs + 1] = 1.0;
      p.ineq_mat.resize(0, n_v);
      p.ineq_rhs.resize(0);
      p.free_vars.push_back(n + 2 * t_obs);
      break;
    }
  }
  return p;
}

struct SolveInternals {
  solver::SolveResult result;
  VectorXd mu;
  VectorXd rho;
};

SolveInternals run_program(const ScenarioMatrix& s, const RiskSpec& spec,
                           std::optional<double> eta, Family family) {
  SolveInternals out;
  out.mu = scenarios::mean_returns(s);
  out.rho = risk::asset_risks(s, spec);
  MathProgram p = (family == Family::DR) ? build_dr_problem(s, spec, eta)
                                         : build_minrisk_problem(s, spec, eta);
  out.result = solver::solve(p);
  switch (out.result.status) {
    case solver::SolveStatus::Optimal:
      return out;
    case solver::SolveStatus::Infeasible:
      throw InfeasibleTargetError("target return unattainable");
    case solver::SolveStatus::Unbounded:
      throw SolverFailureError("program unbounded: " + out.result.message);
    case solver::SolveStatus::NumericalFailure:
      throw SolverFailureError("solver failure: " + out.result.message);
  }
  throw SolverFailureError("unexpected solver status");
}

risk::Portfolio normalize_to_portfolio(const VectorXd& raw) {
  VectorXd w = raw.cwiseMax(0.0);
  const double total = w.sum();
  if (!(total > 0.0))
    throw SolverFailureError("degenerate solution: nonpositive weight total");
  return risk::Portfolio(w / total);
}

std::optional<double> resolve_eta(const ScenarioMatrix& s, const RiskSpec& spec,
                                  Family family, const TargetPolicy& policy) {
  switch (policy.mode) {
    case TargetPolicy::Mode::Unconstrained:
      return std::nullopt;
    case TargetPolicy::Mode::Absolute:
      return policy.value;
    case TargetPolicy::Mode::Fraction: {
      auto [lo, hi] = eta_bounds(s, spec, family);
      return lo + policy.value * (hi - lo);
    }
  }
  return std::nullopt;
}

OptimizationOutcome finish_outcome(const ScenarioMatrix& s, const RiskSpec& spec,
                                   Family family, std::optional<double> eta,
                                   SolveInternals&& run) {
  const Index n = s.assets();
  const VectorXd raw = run.result.v.head(n);
  risk::Portfolio portfolio = normalize_to_portfolio(raw);

  OptimizationOutcome out{.portfolio = std::move(portfolio),
                          .raw_solution = raw,
                          .achieved_risk = 0.0,
                          .achieved_return = 0.0,
                          .achieved_dr = std::nullopt,
                          .normalization_residual = 0.0,
                          .eta = eta,
                          .status = run.result.status,
                          .solver_objective = run.result.objective,
                          .kkt_residual = run.result.kkt_residual,
                          .iterations = run.result.iterations};
  out.achieved_return = run.mu.dot(out.portfolio.weights());
  out.achieved_risk = risk::portfolio_risk(s, out.portfolio.weights(), spec);
  if (family == Family::DR) {
    out.normalization_residual = std::abs(raw.dot(run.rho) - 1.0);
    out.achieved_dr = out.portfolio.weights().dot(run.rho) / out.achieved_risk;
  }
  return out;
}

}  // namespace

TargetPolicy TargetPolicy::fraction(double f) {
  if (!(f >= 0.0 && f <= 1.0))
    throw std::invalid_argument("TargetPolicy: fraction must lie in [0,1]");
  return {Mode::Fraction, f};
}

MathProgram build_dr_problem(const ScenarioMatrix& s, const RiskSpec& spec,
                             std::optional<double> eta) {
  const VectorXd rho = risk::asset_risks(s, spec);
  check_schaible_positivity(rho);
  MathProgram p = build_measure_program(s, spec, rho);
  if (eta) add_return_row(p, scenarios::mean_returns(s), *eta, /*dr_form=*/true);
  p.validate();
  return p;
}

MathProgram build_minrisk_problem(const ScenarioMatrix& s, const RiskSpec& spec,
                                  std::optional<double> eta) {
  MathProgram p = build_measure_program(s, spec, VectorXd::Ones(s.assets()));
  if (eta) add_return_row(p, scenarios::mean_returns(s), *eta, /*dr_form=*/false);
  p.validate();
  return p;
}

OptimizationOutcome solve_dr(const ScenarioMatrix& s, const RiskSpec& spec,
                             const TargetPolicy& policy) {
  const std::optional<double> eta = resolve_eta(s, spec, Family::DR, policy);
  return finish_outcome(s, spec, Family::DR, eta, run_program(s, spec, eta, Family::DR));
}

OptimizationOutcome solve_minrisk(const ScenarioMatrix& s, const RiskSpec& spec,
                                  const TargetPolicy& policy) {
  const std::optional<double> eta = resolve_eta(s, spec, Family::MinRisk, policy);
  return finish_outcome(s, spec, Family::MinRisk, eta,
                        run_program(s, spec, eta, Family::MinRisk));
}

std::pair<double, double> eta_bounds(const ScenarioMatrix& s, const RiskSpec& spec,
                                     Family family) {
  const VectorXd mu = scenarios::mean_returns(s);
  const double eta_max = mu.maxCoeff();
  const OptimizationOutcome base =
      (family == Family::DR) ? solve_dr(s, spec, TargetPolicy::unconstrained())
                             : solve_minrisk(s, spec, TargetPolicy::unconstrained());
  return {base.achieved_return, eta_max};
}

std::vector<FrontierPoint> frontier(const ScenarioMatrix& s, const RiskSpec& spec,
                                    Family family, int grid_size) {
  if (grid_size < 2) throw std::invalid_argument("frontier: grid size must be >= 2");
  const auto [eta_min, eta_max] = eta_bounds(s, spec, family);
  std::vector<FrontierPoint> points;
  points.reserve(static_cast<std::size_t>(grid_size));
  for (int k = 0; k < grid_size; ++k) {
    FrontierPoint pt;
    pt.eta = eta_min + (eta_max - eta_min) * static_cast<double>(k) /
                           static_cast<double>(grid_size - 1);
    try {
      auto outcome = (family == Family::DR)
                         ? solve_dr(s, spec, TargetPolicy::absolute(pt.eta))
                         : solve_minrisk(s, spec, TargetPolicy::absolute(pt.eta));
      pt.feasible = true;
      pt.outcome = std::move(outcome);
    } catch (const InfeasibleTargetError& e) {
      pt.feasible = false;
      pt.note = e.what();
    } catch (const SolverFailureError& e) {
      pt.feasible = false;
      pt.note = e.what();
    }
    points.push_back(std::move(pt));
  }
  return points;
}

}  // namespace maxdiv::optimizer
