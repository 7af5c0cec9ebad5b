#include "maxdiv/diversification.hpp"

namespace maxdiv::diversification {

DrValue diversification_ratio(const ScenarioMatrix& s, const Eigen::VectorXd& weights,
                              const RiskSpec& spec) {
  DrValue v;
  const Eigen::VectorXd rho = risk::asset_risks(s, spec);
  v.numerator = weights.dot(rho);
  v.denominator = risk::portfolio_risk(s, weights, spec);
  v.nonpositive_asset_risk = (rho.minCoeff() <= 0.0);
  if (!(v.denominator > 0.0))
    throw std::domain_error("ratio undefined: nonpositive portfolio risk");
  v.ratio = v.numerator / v.denominator;
  return v;
}

}  // namespace maxdiv::diversification
