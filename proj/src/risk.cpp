#include "maxdiv/risk.hpp"

#include <algorithm>
#include <cmath>

namespace maxdiv::risk {

RiskSpec RiskSpec::cvar(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("RiskSpec: epsilon must lie in (0,1)");
  return {Measure::CVaR, epsilon, 0.0};
}

RiskSpec RiskSpec::expectile(double alpha) {
  if (!(alpha >= 0.5 && alpha < 1.0))
    throw std::invalid_argument("RiskSpec: alpha must lie in [1/2,1)");
  return {Measure::Expectile, 0.0, alpha};
}

const char* RiskSpec::name() const {
  switch (kind) {
    case Measure::Volatility: return "volatility";
    case Measure::MAD: return "mad";
    case Measure::CVaR: return "cvar";
    case Measure::Expectile: return "expectile";
  }
  return "?";
}

Portfolio::Portfolio(Eigen::VectorXd weights) : weights_(std::move(weights)) {
  if (weights_.size() < 1) throw std::invalid_argument("Portfolio: empty weight vector");
  for (Eigen::Index i = 0; i < weights_.size(); ++i) {
    if (weights_[i] < -1e-12)
      throw std::invalid_argument("Portfolio: negative weight at index " + std::to_string(i));
    if (weights_[i] < 0.0) weights_[i] = 0.0;
  }
  const double total = weights_.sum();
  if (std::abs(total - 1.0) > 1e-9)
    throw std::invalid_argument("Portfolio: weights sum to " + std::to_string(total) +
                                ", expected 1");
}

Eigen::VectorXd portfolio_returns(const ScenarioMatrix& s, const Eigen::VectorXd& weights) {
  if (weights.size() != s.assets())
    throw std::invalid_argument("portfolio_returns: dimension mismatch");
  return s.returns * weights;
}

double volatility(const ScenarioMatrix& s, const Eigen::VectorXd& weights) {
  return volatility(scenarios::covariance(s), weights);
}

double volatility(const Eigen::MatrixXd& cov, const Eigen::VectorXd& weights) {
  if (weights.size() != cov.rows())
    throw std::invalid_argument("volatility: dimension mismatch");
  const double quad = weights.dot(cov * weights);
  return std::sqrt(std::max(quad, 0.0));
}

double mad(const ScenarioMatrix& s, const Eigen::VectorXd& weights) {
  Eigen::VectorXd r = portfolio_returns(s, weights);
  return (r.array() - r.mean()).abs().mean();
}

Eigen::Index tail_count(double epsilon, Eigen::Index observations) {
  const auto j = static_cast<Eigen::Index>(
      std::floor(epsilon * static_cast<double>(observations) + 0.5));
  if (j < 1)
    throw std::invalid_argument("epsilon too small for sample: round(epsilon*T) = 0");
  return std::min(j, observations);
}

double cvar_of(const Eigen::VectorXd& sample, double epsilon) {
  const Eigen::Index j = tail_count(epsilon, sample.size());
  std::vector<double> values(sample.data(), sample.data() + sample.size());
  std::nth_element(values.begin(), values.begin() + (j - 1), values.end());
  double tail_sum = 0.0;
  for (Eigen::Index t = 0; t < j; ++t) tail_sum += values[static_cast<std::size_t>(t)];
  return -tail_sum / static_cast<double>(j);
}

double cvar(const ScenarioMatrix& s, const Eigen::VectorXd& weights, double epsilon) {
  return cvar_of(portfolio_returns(s, weights), epsilon);
}

namespace {

// alpha * sum (x - e)+  -  (1-alpha) * sum (x - e)- ; strictly decreasing in e.
double expectile_residual(const Eigen::VectorXd& sample, double alpha, double e) {
  double pos = 0.0, neg = 0.0;
  for (Eigen::Index t = 0; t < sample.size(); ++t) {
    const double d = sample[t] - e;
    if (d > 0.0) pos += d;
    else neg -= d;
  }
  return alpha * pos - (1.0 - alpha) * neg;
}

}  // namespace

double expectile_of(const Eigen::VectorXd& sample, double alpha) {
  if (sample.size() < 1) throw std::invalid_argument("expectile_of: empty sample");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw std::invalid_argument("expectile_of: alpha must lie in (0,1)");
  double lo = sample.minCoeff();
  double hi = sample.maxCoeff();
  if (lo == hi) return lo;
  // Bisection: residual(lo) >= 0 >= residual(hi), and the residual is
  // monotone, so the bracket never degenerates.
  for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid <= lo || mid >= hi) break;  // bracket at machine resolution
    if (expectile_residual(sample, alpha, mid) >= 0.0) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double expectile_loss(const ScenarioMatrix& s, const Eigen::VectorXd& weights, double alpha) {
  return expectile_of(-portfolio_returns(s, weights), alpha);
}

Eigen::VectorXd asset_risks(const ScenarioMatrix& s, const RiskSpec& spec) {
  const Eigen::Index n = s.assets();
  Eigen::VectorXd rho(n);
  switch (spec.kind) {
    case Measure::Volatility: {
      Eigen::MatrixXd cov = scenarios::covariance(s);
      rho = cov.diagonal().cwiseMax(0.0).cwiseSqrt();
      break;
    }
    case Measure::MAD:
      for (Eigen::Index i = 0; i < n; ++i) {
        Eigen::VectorXd r = s.returns.col(i);
        rho[i] = (r.array() - r.mean()).abs().mean();
      }
      break;
    case Measure::CVaR:
      for (Eigen::Index i = 0; i < n; ++i) rho[i] = cvar_of(s.returns.col(i), spec.epsilon);
      break;
    case Measure::Expectile:
      for (Eigen::Index i = 0; i < n; ++i)
        rho[i] = expectile_of(-s.returns.col(i), spec.alpha);
      break;
  }
  return rho;
}

double portfolio_risk(const ScenarioMatrix& s, const Eigen::VectorXd& weights,
                      const RiskSpec& spec) {
  switch (spec.kind) {
    case Measure::Volatility: return volatility(s, weights);
    case Measure::MAD: return mad(s, weights);
    case Measure::CVaR: return cvar(s, weights, spec.epsilon);
    case Measure::Expectile: return expectile_loss(s, weights, spec.alpha);
  }
  throw std::logic_error("unreachable");
}

Eigen::VectorXd total_risk_contributions_vol(const Eigen::MatrixXd& cov,
                                             const Eigen::VectorXd& x) {
  if (x.size() != cov.rows())
    throw std::invalid_argument("total_risk_contributions_vol: dimension mismatch");
  const Eigen::VectorXd cov_x = cov * x;
  const double variance = x.dot(cov_x);
  if (!(variance > 0.0))
    throw std::domain_error("total risk contributions: undefined gradient (zero volatility)");
  return x.cwiseProduct(cov_x) / std::sqrt(variance);
}

}  // namespace maxdiv::risk
