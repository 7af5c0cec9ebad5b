#include "maxdiv/backtest.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace maxdiv::backtest {
namespace {

using Eigen::Index;
using Eigen::VectorXd;
using optimizer::Family;
using optimizer::OptimizationOutcome;
using optimizer::TargetPolicy;
using risk::RiskSpec;
using strategies::StrategyConfig;

struct MeasureKey {
  Family family;
  risk::Measure measure;
  bool operator<(const MeasureKey& o) const {
    return std::tie(family, measure) < std::tie(o.family, o.measure);
  }
};

// One in-sample window's solves. The eight unconstrained solutions feed both
// the suffix-0 strategies and the common-target maximum, so they are
// computed once and shared.
class WindowSolver {
 public:
  WindowSolver(const ScenarioMatrix& in_sample, const BacktestConfig& cfg)
      : in_sample_(in_sample), cfg_(cfg) {}

  const OptimizationOutcome& unconstrained(Family family, const RiskSpec& spec) {
    const MeasureKey key{family, spec.kind};
    auto it = cache_.find(key);
    if (it == cache_.end()) {
      auto outcome = (family == Family::DR)
                         ? optimizer::solve_dr(in_sample_, spec, TargetPolicy::unconstrained())
                         : optimizer::solve_minrisk(in_sample_, spec,
                                                    TargetPolicy::unconstrained());
      it = cache_.emplace(key, std::move(outcome)).first;
    }
    return it->second;
  }

  double common_target(std::vector<std::string>& warnings, Index window_index) {
    if (eta_bar_) return *eta_bar_;
    const RiskSpec specs[] = {RiskSpec::volatility(), RiskSpec::mad(),
                              RiskSpec::cvar(cfg_.epsilon), RiskSpec::expectile(cfg_.alpha)};
    const double eta_max = scenarios::mean_returns(in_sample_).maxCoeff();
    double best = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (Family family : {Family::MinRisk, Family::DR}) {
      for (const auto& spec : specs) {
        try {
          const double eta_min = unconstrained(family, spec).achieved_return;
          best = std::max(best, eta_min + (eta_max - eta_min) / 3.0);
          any = true;
        } catch (const optimizer::SchaiblePositivityError& e) {
          std::ostringstream msg;
          msg << "window " << window_index << ": "
              << (family == Family::DR ? "DR/" : "MinRisk/") << spec.name()
              << " dropped from common target: " << e.what();
          warnings.push_back(msg.str());
        }
      }
    }
    if (!any)
      throw optimizer::SolverFailureError("common target undefined: every family failed");
    eta_bar_ = best;
    return best;
  }

 private:
  const ScenarioMatrix& in_sample_;
  const BacktestConfig& cfg_;
  std::map<MeasureKey, OptimizationOutcome> cache_;
  std::optional<double> eta_bar_;
};

}  // namespace

BacktestResult run_backtest(const ScenarioMatrix& s, const BacktestConfig& cfg) {
  if (cfg.in_len < 2) throw std::invalid_argument("backtest: in_len must be >= 2");
  if (cfg.hold_len < 1) throw std::invalid_argument("backtest: hold_len must be >= 1");

  BacktestResult result;
  const std::vector<StrategyId>& requested =
      cfg.strategies.empty() ? strategies::all_strategies() : cfg.strategies;

  // Separate the benchmark column from the tradable universe.
  Index index_col = -1;
  if (cfg.index_column) {
    for (Index j = 0; j < s.assets(); ++j)
      if (s.asset_ids[static_cast<std::size_t>(j)] == *cfg.index_column) index_col = j;
    if (index_col < 0)
      throw std::invalid_argument("backtest: index column not found: " + *cfg.index_column);
  }
  const ScenarioMatrix assets = (index_col >= 0) ? scenarios::drop_column(s, index_col) : s;
  result.asset_ids = assets.asset_ids;
  result.has_index = index_col >= 0;
  for (StrategyId id : requested)
    if (id == StrategyId::Index && !result.has_index)
      throw std::invalid_argument("backtest: Index strategy requires an index column");

  result.plan = scenarios::plan_windows(assets.observations(), cfg.in_len, cfg.hold_len);

  result.series.resize(requested.size());
  for (std::size_t k = 0; k < requested.size(); ++k) {
    result.series[k].id = requested[k];
    result.series[k].index_passthrough = (requested[k] == StrategyId::Index);
  }

  for (std::size_t w = 0; w < result.plan.windows.size(); ++w) {
    const auto& win = result.plan.windows[w];
    const ScenarioMatrix in_sample = scenarios::slice(assets, win.in_start, win.in_end);
    WindowSolver solver(in_sample, cfg);

    for (std::size_t k = 0; k < requested.size(); ++k) {
      StrategySeries& series = result.series[k];
      if (series.failed) continue;
      const StrategyId id = requested[k];

      try {
        if (id == StrategyId::Index) {
          for (Index t = win.out_start; t < win.out_end; ++t)
            series.out_returns.push_back(s.returns(t, index_col));
          continue;
        }

        VectorXd weights;
        if (!strategies::is_optimizing(id)) {
          weights = (id == StrategyId::EW)
                        ? strategies::equally_weighted(assets.assets()).weights()
                        : strategies::risk_parity_vol(scenarios::covariance(in_sample))
                              .weights();
        } else {
          const RiskSpec spec = *strategies::strategy_spec(id, cfg.epsilon, cfg.alpha);
          const bool is_dr = strategies::is_dr_strategy(id);
          if (strategies::is_target_constrained(id)) {
            const double eta = solver.common_target(result.warnings,
                                                    static_cast<Index>(w));
            auto outcome =
                is_dr ? optimizer::solve_dr(in_sample, spec, TargetPolicy::absolute(eta))
                      : optimizer::solve_minrisk(in_sample, spec,
                                                 TargetPolicy::absolute(eta));
            weights = outcome.portfolio.weights();
          } else {
            weights = solver.unconstrained(is_dr ? Family::DR : Family::MinRisk, spec)
                          .portfolio.weights();
          }
        }

        series.rebalances.push_back(weights);
        for (Index t = win.out_start; t < win.out_end; ++t)
          series.out_returns.push_back(assets.returns.row(t).dot(weights));
      } catch (const std::exception& e) {
        series.failed = true;
        std::ostringstream msg;
        msg << "window " << w << ": " << e.what();
        series.failure = msg.str();
        result.warnings.push_back(std::string(strategies::to_string(id)) +
                                  " failed at " + msg.str());
        series.out_returns.clear();
        series.rebalances.clear();
      }
    }
  }

  for (auto& series : result.series) {
    if (series.failed) continue;
    series.wealth.assign(1, 1.0);
    for (double r : series.out_returns)
      series.wealth.push_back(series.wealth.back() * (1.0 + r));
  }
  if (result.has_index) {
    for (const auto& win : result.plan.windows)
      for (Index t = win.out_start; t < win.out_end; ++t)
        result.index_out_returns.push_back(s.returns(t, index_col));
  }
  return result;
}

double turnover(const StrategySeries& series, bool strict) {
  if (series.index_passthrough)
    throw std::invalid_argument("turnover: index passthrough has no weights");
  if (series.failed) throw std::invalid_argument("turnover: failed series");
  const auto& rebalances = series.rebalances;
  if (rebalances.empty()) throw std::invalid_argument("turnover: no rebalances");

  double total = 0.0;
  for (std::size_t sidx = 1; sidx < rebalances.size(); ++sidx)
    total += (rebalances[sidx] - rebalances[sidx - 1]).cwiseAbs().sum();
  if (strict) {
    // Zero initial holdings: the first rebalance buys the whole book.
    total += rebalances.front().cwiseAbs().sum();
    return total / static_cast<double>(rebalances.size());
  }
  if (rebalances.size() == 1) return 0.0;
  return total / static_cast<double>(rebalances.size() - 1);
}

}  // namespace maxdiv::backtest
