#pragma once

#include "maxdiv/strategies.hpp"

namespace maxdiv::backtest {

using scenarios::ScenarioMatrix;
using strategies::StrategyId;

struct BacktestConfig {
  Eigen::Index in_len = 500;
  Eigen::Index hold_len = 20;  // one financial month of trading days
  std::vector<StrategyId> strategies;  // empty = the full catalog
  double epsilon = 0.05;
  double alpha = 0.9;
  /// Column name treated as the benchmark index: excluded from the tradable
  /// universe, consumed by the Index strategy and the benchmark metrics.
  std::optional<std::string> index_column;
  /// Default turnover treats the first rebalance as portfolio inception
  /// (no trade); strict mode measures it against zero holdings and divides
  /// by the full rebalance count.
  bool strict_turnover = false;
};

struct StrategySeries {
  StrategyId id = StrategyId::EW;
  bool index_passthrough = false;
  std::vector<double> out_returns;          // length T - in_len
  std::vector<double> wealth;               // length T - in_len + 1, wealth[0] = 1
  std::vector<Eigen::VectorXd> rebalances;  // weights per window (non-index only)
  bool failed = false;
  std::string failure;  // diagnostics: window index and reason
};

struct BacktestResult {
  scenarios::WindowPlan plan;
  std::vector<std::string> asset_ids;  // tradable universe
  std::vector<StrategySeries> series;  // config order
  bool has_index = false;
  std::vector<double> index_out_returns;
  std::vector<std::string> warnings;
};

/// Rolling-window evaluation: fit each strategy on every in-sample slice,
/// hold its weights fixed across the following holding period, record
/// out-of-sample returns and the compounded wealth path. A solve failure
/// marks the strategy failed for the whole run; there is no silent fallback.
BacktestResult run_backtest(const ScenarioMatrix& s, const BacktestConfig& cfg);

/// Average l1 distance between consecutive rebalance weight vectors.
/// Returns 0 for a single rebalance; throws on an index passthrough or a
/// failed series.
double turnover(const StrategySeries& series, bool strict = false);

}  // namespace maxdiv::backtest
