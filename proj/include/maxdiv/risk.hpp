#pragma once

#include <Eigen/Dense>
#include <stdexcept>

#include "maxdiv/scenarios.hpp"

namespace maxdiv::risk {

using scenarios::ScenarioMatrix;

enum class Measure { Volatility, MAD, CVaR, Expectile };

/// Which risk measure to evaluate, with its parameter. epsilon is the CVaR
/// tail probability in (0,1); alpha is the expectile level in [1/2,1) (the
/// coherence range).
struct RiskSpec {
  Measure kind = Measure::Volatility;
  double epsilon = 0.0;  // meaningful iff kind == CVaR
  double alpha = 0.0;    // meaningful iff kind == Expectile

  static RiskSpec volatility() { return {Measure::Volatility, 0.0, 0.0}; }
  static RiskSpec mad() { return {Measure::MAD, 0.0, 0.0}; }
  static RiskSpec cvar(double epsilon);
  static RiskSpec expectile(double alpha);

  const char* name() const;
};

/// Long-only weight vector on the unit simplex. Construction validates
/// sum(x) == 1 within 1e-9 and clamps entries in [-1e-12, 0) to zero;
/// anything more negative is rejected.
class Portfolio {
 public:
  explicit Portfolio(Eigen::VectorXd weights);

  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return weights_.size(); }
  double operator[](Eigen::Index i) const { return weights_[i]; }

 private:
  Eigen::VectorXd weights_;
};

/// Scenario-by-scenario portfolio return: entry t equals sum_i w_i r_{i,t}.
/// Accepts any nonnegative exposure vector, not just simplex points, so the
/// same evaluators serve both portfolios and the transformed y variables.
Eigen::VectorXd portfolio_returns(const ScenarioMatrix& s, const Eigen::VectorXd& weights);

/// sqrt(w' Sigma w) with Sigma the 1/T sample covariance.
double volatility(const ScenarioMatrix& s, const Eigen::VectorXd& weights);
double volatility(const Eigen::MatrixXd& cov, const Eigen::VectorXd& weights);

/// Mean absolute deviation of the portfolio return from its mean.
double mad(const ScenarioMatrix& s, const Eigen::VectorXd& weights);

/// j = round(epsilon * T) with half-up rounding: the one tail-size rule used
/// across the whole artifact. Throws when j would be zero.
Eigen::Index tail_count(double epsilon, Eigen::Index observations);

/// Average of the j smallest values of `sample`, negated.
double cvar_of(const Eigen::VectorXd& sample, double epsilon);
double cvar(const ScenarioMatrix& s, const Eigen::VectorXd& weights, double epsilon);

/// Unique root e of  alpha E[(X-e)+] = (1-alpha) E[(X-e)-], found by
/// bisection on [min X, max X]. The residual at the returned root is below
/// 1e-12 * sample size for alpha in (0,1).
double expectile_of(const Eigen::VectorXd& sample, double alpha);

/// alpha-expectile of the portfolio loss -R_P(x).
double expectile_loss(const ScenarioMatrix& s, const Eigen::VectorXd& weights, double alpha);

/// rho_i = measure applied to the unit portfolio e_i, for every asset.
Eigen::VectorXd asset_risks(const ScenarioMatrix& s, const RiskSpec& spec);

/// Dispatch to the measure named by `spec`.
double portfolio_risk(const ScenarioMatrix& s, const Eigen::VectorXd& weights,
                      const RiskSpec& spec);

/// TRC_i = x_i (Sigma x)_i / sqrt(x' Sigma x). The Euler identity
/// sum_i TRC_i == volatility holds to round-off. Throws std::domain_error
/// on a zero-volatility portfolio ("undefined gradient").
Eigen::VectorXd total_risk_contributions_vol(const Eigen::MatrixXd& cov,
                                             const Eigen::VectorXd& x);

}  // namespace maxdiv::risk
