#pragma once

#include "maxdiv/backtest.hpp"

namespace maxdiv::metrics {

/// Annualized rolling return-on-investment summary. Percentiles use linear
/// interpolation between order statistics.
struct RoiSummary {
  double mean = 0.0, vol = 0.0;
  double p5 = 0.0, p25 = 0.0, p50 = 0.0, p75 = 0.0, p95 = 0.0;
};

/// One strategy's metric row. Absent values stay absent; tables never
/// contain NaN.
struct StrategyMetrics {
  std::string name;
  std::optional<double> mu_out, sigma_out, sharpe, mdd, ulcer, rachev10, turnover,
      alpha_j, info_ratio, var5, omega, ave_count;
  std::optional<RoiSummary> roi;
};

struct MetricTable {
  std::vector<StrategyMetrics> rows;
};

/// mean / population standard deviation; absent when the deviation is zero.
std::optional<double> sharpe(const std::vector<double>& returns);

/// Drawdown series DD_t = (W_t - max_{tau<=t} W_tau) / max_{tau<=t} W_tau
/// over the given wealth path; returns (min DD, sqrt(mean DD^2)).
std::pair<double, double> drawdown_stats(const std::vector<double>& wealth);

/// Mean of the best 10% returns over the magnitude of the mean of the worst
/// 10%, signs preserved; tail size j = round(N/10).
std::optional<double> rachev10(const std::vector<double>& returns);

/// (Jensen alpha, information ratio) against the benchmark series.
std::pair<std::optional<double>, std::optional<double>> jensen_alpha_info(
    const std::vector<double>& returns, const std::vector<double>& index_returns);

/// Empirical 5% value-at-risk: the j-th smallest return negated,
/// j = round(0.05 N).
std::optional<double> var5(const std::vector<double>& returns);

/// E[max(0, R - eta)] / |E[min(0, R - eta)]|; absent without losses.
std::optional<double> omega(const std::vector<double>& returns, double eta = 0.0);

struct RoiResult {
  std::vector<double> series;  // rolling horizon compound returns
  std::optional<RoiSummary> summary;
};

/// ROI_tau = prod_{t=tau-h+1..tau} (1 + R_t) - 1 for tau = h..N; absent when
/// the series is no longer than the horizon.
RoiResult roi_series(const std::vector<double>& returns, int horizon = 250);

/// Average number of selected assets across rebalances (weights above the
/// threshold).
double ave_count(const std::vector<Eigen::VectorXd>& rebalances, double threshold = 1e-5);

struct TableOptions {
  int roi_horizon = 250;
  double count_threshold = 1e-5;
  bool strict_turnover = false;
};

/// Assembles the full per-strategy metric table from a backtest run. Failed
/// strategies are excluded; the Index row reports only its own return-path
/// statistics.
MetricTable build_metric_table(const backtest::BacktestResult& result,
                               const TableOptions& options = {});

std::string table_to_csv(const MetricTable& table);
std::string table_to_text(const MetricTable& table);

/// Per-metric ranks (1 = best, dense ranking), orientation per metric;
/// unrankable cells stay empty.
std::string ranks_to_csv(const MetricTable& table);

}  // namespace maxdiv::metrics
