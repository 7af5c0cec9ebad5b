#include "maxdiv/strategies.hpp"

#include <array>
#include <cmath>

namespace maxdiv::strategies {

namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using optimizer::Family;
using optimizer::TargetPolicy;
using risk::RiskSpec;

constexpr std::array<std::pair<StrategyId, const char*>, 19> kNames{{
    {StrategyId::MV0, "MV0"},         {StrategyId::MAD0, "MAD0"},
    {StrategyId::CVaR0, "CVaR0"},     {StrategyId::Expe0, "Expe0"},
    {StrategyId::MV1, "MV1"},         {StrategyId::MAD1, "MAD1"},
    {StrategyId::CVaR1, "CVaR1"},     {StrategyId::Expe1, "Expe1"},
    {StrategyId::DRvol0, "DRvol0"},   {StrategyId::DRMAD0, "DRMAD0"},
    {StrategyId::DRCVaR0, "DRCVaR0"}, {StrategyId::DRExpe0, "DRExpe0"},
    {StrategyId::DRvol1, "DRvol1"},   {StrategyId::DRMAD1, "DRMAD1"},
    {StrategyId::DRCVaR1, "DRCVaR1"}, {StrategyId::DRExpe1, "DRExpe1"},
    {StrategyId::RP, "RP"},           {StrategyId::EW, "EW"},
    {StrategyId::Index, "Index"},
}};

}  // namespace

const char* to_string(StrategyId id) {
  for (const auto& [sid, name] : kNames)
    if (sid == id) return name;
  return "?";
}

std::optional<StrategyId> parse_strategy(const std::string& name) {
  for (const auto& [sid, sname] : kNames)
    if (name == sname) return sid;
  return std::nullopt;
}

const std::vector<StrategyId>& all_strategies() {
  static const std::vector<StrategyId> all = [] {
    std::vector<StrategyId> v;
    for (const auto& [sid, name] : kNames) v.push_back(sid);
    return v;
  }();
  return all;
}

bool is_target_constrained(StrategyId id) {
  switch (id) {
    case StrategyId::MV1: case StrategyId::MAD1:
    case StrategyId::CVaR1: case StrategyId::Expe1:
    case StrategyId::DRvol1: case StrategyId::DRMAD1:
    case StrategyId::DRCVaR1: case StrategyId::DRExpe1:
      return true;
    default:
      return false;
  }
}

bool is_dr_strategy(StrategyId id) {
  switch (id) {
    case StrategyId::DRvol0: case StrategyId::DRMAD0:
    case StrategyId::DRCVaR0: case StrategyId::DRExpe0:
    case StrategyId::DRvol1: case StrategyId::DRMAD1:
    case StrategyId::DRCVaR1: case StrategyId::DRExpe1:
      return true;
    default:
      return false;
  }
}

bool is_optimizing(StrategyId id) {
  switch (id) {
    case StrategyId::RP: case StrategyId::EW: case StrategyId::Index:
      return false;
    default:
      return true;
  }
}

std::optional<RiskSpec> strategy_spec(StrategyId id, double epsilon, double alpha) {
  switch (id) {
    case StrategyId::MV0: case StrategyId::MV1:
    case StrategyId::DRvol0: case StrategyId::DRvol1:
      return RiskSpec::volatility();
    case StrategyId::MAD0: case StrategyId::MAD1:
    case StrategyId::DRMAD0: case StrategyId::DRMAD1:
      return RiskSpec::mad();
    case StrategyId::CVaR0: case StrategyId::CVaR1:
    case StrategyId::DRCVaR0: case StrategyId::DRCVaR1:
      return RiskSpec::cvar(epsilon);
    case StrategyId::Expe0: case StrategyId::Expe1:
    case StrategyId::DRExpe0: case StrategyId::DRExpe1:
      return RiskSpec::expectile(alpha);
    default:
      return std::nullopt;
  }
}

CommonTarget common_target(const ScenarioMatrix& s, double epsilon, double alpha) {
  const RiskSpec specs[] = {RiskSpec::volatility(), RiskSpec::mad(), RiskSpec::cvar(epsilon),
                            RiskSpec::expectile(alpha)};
  const double eta_max = scenarios::mean_returns(s).maxCoeff();
  CommonTarget out;
  bool any = false;
  double best = -std::numeric_limits<double>::infinity();
  for (Family family : {Family::MinRisk, Family::DR}) {
    for (const auto& spec : specs) {
      try {
        auto [eta_min, eta_hi] = optimizer::eta_bounds(s, spec, family);
        best = std::max(best, eta_min + (eta_hi - eta_min) / 3.0);
        any = true;
      } catch (const optimizer::SchaiblePositivityError& e) {
        out.warnings.push_back(std::string(family == Family::DR ? "DR/" : "MinRisk/") +
                               spec.name() + " dropped from common target: " + e.what());
      }
    }
  }
  if (!any)
    throw optimizer::SolverFailureError("common target undefined: every family failed");
  out.eta_bar = best;
  return out;
}

Portfolio risk_parity_vol(const Eigen::MatrixXd& cov) {
  const Index n = cov.rows();
  if (n < 1) throw std::invalid_argument("risk_parity_vol: empty covariance");
  Eigen::LLT<MatrixXd> llt(cov);
  const MatrixXd l = llt.matrixL();
  if (llt.info() != Eigen::Success ||
      l.diagonal().minCoeff() <= 1e-12 * l.diagonal().maxCoeff())
    throw std::domain_error("risk parity undefined: covariance not positive definite");

  // Minimize 1/2 x'Sigma x - sum_i log x_i over x > 0. The stationary point
  // satisfies x_i (Sigma x)_i = 1 for all i, so the normalized solution
  // equalizes the total risk contributions.
  VectorXd x = VectorXd::Constant(n, 1.0);
  const double sigma_scale = std::sqrt(cov.diagonal().maxCoeff());
  if (sigma_scale > 0.0) x.setConstant(1.0 / sigma_scale);  // start near the right scale

  auto barrier_value = [&](const VectorXd& w) {
    return 0.5 * w.dot(cov * w) - w.array().log().sum();
  };
  for (int iter = 0; iter < 200; ++iter) {
    const VectorXd grad = cov * x - x.cwiseInverse();
    if (grad.lpNorm<Eigen::Infinity>() <= 1e-10) break;
    MatrixXd hess = cov;
    hess.diagonal() += x.array().square().inverse().matrix();
    VectorXd step = hess.ldlt().solve(-grad);
    double t = 1.0;
    // Stay strictly positive, then backtrack on the objective.
    for (Index i = 0; i < n; ++i)
      if (step[i] < 0.0) t = std::min(t, -0.95 * x[i] / step[i]);
    const double f0 = barrier_value(x);
    const double slope = grad.dot(step);
    while (t > 1e-14 && barrier_value(x + t * step) > f0 + 1e-4 * t * slope) t /= 2.0;
    if (t <= 1e-14) break;
    x += t * step;
  }
  const VectorXd grad = cov * x - x.cwiseInverse();
  if (grad.lpNorm<Eigen::Infinity>() > 1e-8 * std::max(1.0, x.lpNorm<Eigen::Infinity>()))
    throw std::domain_error("risk parity solve did not converge");
  return Portfolio(x / x.sum());
}

Portfolio equally_weighted(Eigen::Index n) {
  if (n < 1) throw std::invalid_argument("equally_weighted: need at least one asset");
  return Portfolio(VectorXd::Constant(n, 1.0 / static_cast<double>(n)));
}

StrategyResult run_strategy(StrategyId id, const ScenarioMatrix& in_sample,
                            const StrategyConfig& config) {
  StrategyResult res;
  switch (id) {
    case StrategyId::EW:
      res.portfolio = equally_weighted(in_sample.assets());
      return res;
    case StrategyId::RP:
      res.portfolio = risk_parity_vol(scenarios::covariance(in_sample));
      return res;
    case StrategyId::Index:
      res.index_passthrough = true;
      return res;
    default:
      break;
  }

  const RiskSpec spec = *strategy_spec(id, config.epsilon, config.alpha);
  TargetPolicy policy = TargetPolicy::unconstrained();
  if (is_target_constrained(id)) {
    const double eta = config.target_return
                           ? *config.target_return
                           : common_target(in_sample, config.epsilon, config.alpha).eta_bar;
    policy = TargetPolicy::absolute(eta);
  }
  auto outcome = is_dr_strategy(id) ? optimizer::solve_dr(in_sample, spec, policy)
                                    : optimizer::solve_minrisk(in_sample, spec, policy);
  res.portfolio = outcome.portfolio;
  res.outcome = std::move(outcome);
  return res;
}

}  // namespace maxdiv::strategies
