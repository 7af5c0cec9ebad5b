#pragma once

#include "maxdiv/risk.hpp"

namespace maxdiv::diversification {

using risk::RiskSpec;
using scenarios::ScenarioMatrix;

/// Diversification ratio, reported with numerator and denominator kept
/// separate so the fractional-transform normalization can be verified
/// exactly downstream.
struct DrValue {
  double numerator = 0.0;    // sum_i x_i rho_i
  double denominator = 0.0;  // rho(x)
  double ratio = 0.0;
  bool nonpositive_asset_risk = false;  // some rho_i <= 0: ratio >= 1 not guaranteed
};

/// DR(x) = (sum_i x_i rho_i) / rho(x). Throws std::domain_error when
/// rho(x) <= 0 ("ratio undefined"); a nonpositive asset risk is recorded as
/// a warning in the result, not an error.
DrValue diversification_ratio(const ScenarioMatrix& s, const Eigen::VectorXd& weights,
                              const RiskSpec& spec);

}  // namespace maxdiv::diversification
