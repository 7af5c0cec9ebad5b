#pragma once

#include <optional>
#include <string>
#include <vector>

#include "maxdiv/optimizer.hpp"

namespace maxdiv::strategies {

using risk::Portfolio;
using scenarios::ScenarioMatrix;

/// The full strategy catalog. Suffix 0 = no return constraint; suffix 1 =
/// the common target return across the eight optimizing families.
enum class StrategyId {
  MV0, MAD0, CVaR0, Expe0,
  MV1, MAD1, CVaR1, Expe1,
  DRvol0, DRMAD0, DRCVaR0, DRExpe0,
  DRvol1, DRMAD1, DRCVaR1, DRExpe1,
  RP, EW, Index,
};

const char* to_string(StrategyId id);
std::optional<StrategyId> parse_strategy(const std::string& name);
const std::vector<StrategyId>& all_strategies();

bool is_target_constrained(StrategyId id);  // the suffix-1 strategies
bool is_dr_strategy(StrategyId id);         // the fractional-transform family
bool is_optimizing(StrategyId id);          // false for RP, EW, Index

/// Risk measure behind an optimizing strategy; nullopt for RP/EW/Index.
std::optional<risk::RiskSpec> strategy_spec(StrategyId id, double epsilon, double alpha);

struct StrategyConfig {
  double epsilon = 0.05;  // CVaR tail level
  double alpha = 0.9;     // expectile level
  /// Target return for the suffix-1 strategies. When absent, the common
  /// target is computed on the in-sample window itself.
  std::optional<double> target_return;
};

struct CommonTarget {
  double eta_bar = 0.0;
  /// Families excluded from the max (positivity failures), with reasons.
  std::vector<std::string> warnings;
};

/// eta_bar_1 = max over the eight families {min-risk, max-DR} x {vol, MAD,
/// CVaR, expectile} of eta_min + (1/3)(eta_max - eta_min). A family whose
/// fractional transform is undefined on this sample is dropped with a
/// warning rather than aborting.
CommonTarget common_target(const ScenarioMatrix& s, double epsilon, double alpha);

/// Equal-total-risk-contribution portfolio for volatility: minimize
/// 1/2 x'Sigma x - sum log x_i by a damped Newton method (gradient norm
/// 1e-10), then normalize onto the simplex. Throws std::domain_error when
/// Sigma is not positive definite.
Portfolio risk_parity_vol(const Eigen::MatrixXd& cov);

Portfolio equally_weighted(Eigen::Index n);

struct StrategyResult {
  std::optional<Portfolio> portfolio;  // absent for the index passthrough
  bool index_passthrough = false;
  std::optional<optimizer::OptimizationOutcome> outcome;  // optimizing strategies
};

/// Fits one strategy on an in-sample window. Index yields a passthrough
/// sentinel: the backtester reads its out-of-sample returns from the index
/// column, not from weights.
StrategyResult run_strategy(StrategyId id, const ScenarioMatrix& in_sample,
                            const StrategyConfig& config);

}  // namespace maxdiv::strategies
