#include "maxdiv/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <sstream>

#include "maxdiv/io.hpp"
#include "maxdiv/optimizer.hpp"

namespace maxdiv::cli {
namespace {

namespace fs = std::filesystem;
using Eigen::Index;
using Eigen::VectorXd;

std::string join_path(const std::string& dir, const std::string& name) {
  return (fs::path(dir) / name).string();
}

std::vector<strategies::StrategyId> parse_strategy_list(const RunConfig& cfg) {
  std::vector<strategies::StrategyId> ids;
  if (cfg.strategies.empty()) {
    ids = strategies::all_strategies();
    if (cfg.index_col.empty())
      std::erase(ids, strategies::StrategyId::Index);
    return ids;
  }
  for (const auto& name : cfg.strategies) {
    auto id = strategies::parse_strategy(name);
    if (!id) throw std::invalid_argument("unknown strategy: " + name);
    ids.push_back(*id);
  }
  return ids;
}

struct LoadedData {
  scenarios::PriceSeries prices;
  scenarios::ScenarioMatrix returns;
  std::vector<std::string> return_dates;  // one per scenario row
};

LoadedData load_data(const RunConfig& cfg) {
  LoadedData d;
  d.prices = scenarios::load_prices_file(cfg.data_path);
  d.returns = scenarios::to_returns(d.prices);
  d.return_dates.assign(d.prices.dates.begin() + 1, d.prices.dates.end());
  return d;
}

void ensure_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir, ec);
  if (ec) throw std::invalid_argument("cannot create output directory: " + cfg.out_dir);
}

std::string config_hash(const RunConfig& cfg) {
  return io::hash_hex(io::fnv1a64(cfg.canonical()));
}

// Target return for one suffix-1 strategy under the configured eta policy:
// "abs" passes --eta through, "frac" interpolates that strategy's own
// [eta_min, eta_max] interval, "none" keeps the catalog behaviour (the
// common target across the eight families).
std::optional<double> resolve_target(const RunConfig& cfg, strategies::StrategyId id,
                                     const scenarios::ScenarioMatrix& sample) {
  if (!strategies::is_target_constrained(id)) return std::nullopt;
  if (cfg.eta_mode == "abs") return cfg.eta;
  if (cfg.eta_mode == "frac") {
    const auto spec = strategies::strategy_spec(id, cfg.epsilon, cfg.alpha);
    const auto family = strategies::is_dr_strategy(id) ? optimizer::Family::DR
                                                       : optimizer::Family::MinRisk;
    auto [lo, hi] = optimizer::eta_bounds(sample, *spec, family);
    return lo + cfg.eta * (hi - lo);
  }
  return std::nullopt;
}

}  // namespace

void RunConfig::validate() const {
  const std::vector<std::string> commands = {"ingest", "optimize", "frontier", "backtest",
                                             "report"};
  if (std::find(commands.begin(), commands.end(), command) == commands.end())
    throw std::invalid_argument("unknown command: " + command);
  if (data_path.empty()) throw std::invalid_argument("--data is required");
  if (measure != "vol" && measure != "mad" && measure != "cvar" && measure != "expectile")
    throw std::invalid_argument("unknown measure: " + measure);
  if (!(epsilon > 0.0 && epsilon < 1.0))
    throw std::invalid_argument("--epsilon must lie in (0,1)");
  if (!(alpha >= 0.5 && alpha < 1.0))
    throw std::invalid_argument("--alpha must lie in [0.5,1)");
  if (in_len < 2) throw std::invalid_argument("--in-len must be >= 2");
  if (hold_len < 1) throw std::invalid_argument("--hold-len must be >= 1");
  if (eta_mode != "none" && eta_mode != "frac" && eta_mode != "abs")
    throw std::invalid_argument("--eta-mode must be none, frac, or abs");
  if (eta_mode == "frac" && !(eta >= 0.0 && eta <= 1.0))
    throw std::invalid_argument("--eta fraction must lie in [0,1]");
  if (grid < 2) throw std::invalid_argument("--grid must be >= 2");
  if (family != "dr" && family != "minrisk")
    throw std::invalid_argument("--family must be dr or minrisk");
}

std::string RunConfig::canonical() const {
  std::ostringstream s;
  s << "command=" << command << ";data=" << data_path << ";measure=" << measure
    << ";epsilon=" << io::format_double(epsilon) << ";alpha=" << io::format_double(alpha)
    << ";in_len=" << in_len << ";hold_len=" << hold_len << ";eta_mode=" << eta_mode
    << ";eta=" << io::format_double(eta) << ";grid=" << grid << ";family=" << family
    << ";index_col=" << index_col << ";strict_turnover=" << strict_turnover
    << ";seed=" << seed << ";strategies=";
  for (const auto& n : strategies) s << n << ',';
  return s.str();
}

risk::RiskSpec measure_spec(const RunConfig& cfg) {
  if (cfg.measure == "vol") return risk::RiskSpec::volatility();
  if (cfg.measure == "mad") return risk::RiskSpec::mad();
  if (cfg.measure == "cvar") return risk::RiskSpec::cvar(cfg.epsilon);
  return risk::RiskSpec::expectile(cfg.alpha);
}

int cmd_ingest(const RunConfig& cfg) {
  auto data = load_data(cfg);
  ensure_out_dir(cfg);
  const std::string hash = config_hash(cfg);

  io::write_text_file(join_path(cfg.out_dir, "returns.csv"), hash,
                      scenarios::returns_to_csv(data.returns, data.return_dates));

  const VectorXd mu = scenarios::mean_returns(data.returns);
  const Eigen::MatrixXd cov = scenarios::covariance(data.returns);
  std::ostringstream summary;
  summary << "# assets " << data.returns.assets() << ", observations "
          << data.returns.observations() << "\n";
  summary << "asset,mean,stdev\n";
  for (Index j = 0; j < data.returns.assets(); ++j)
    summary << io::csv_escape(data.returns.asset_ids[static_cast<std::size_t>(j)]) << ','
            << io::format_double(mu[j]) << ','
            << io::format_double(std::sqrt(std::max(cov(j, j), 0.0))) << '\n';
  io::write_text_file(join_path(cfg.out_dir, "summary.csv"), hash, summary.str());
  if (cfg.print_summary) std::cout << summary.str();
  return kOk;
}

int cmd_optimize(const RunConfig& cfg) {
  auto data = load_data(cfg);
  ensure_out_dir(cfg);
  const std::string hash = config_hash(cfg);

  auto sample = data.returns;
  if (!cfg.index_col.empty()) {
    Index col = -1;
    for (Index j = 0; j < sample.assets(); ++j)
      if (sample.asset_ids[static_cast<std::size_t>(j)] == cfg.index_col) col = j;
    if (col < 0) throw std::invalid_argument("index column not found: " + cfg.index_col);
    sample = scenarios::drop_column(sample, col);
  }

  auto ids = parse_strategy_list(cfg);
  std::erase(ids, strategies::StrategyId::Index);  // nothing to optimize

  std::ostringstream csv;
  csv << "strategy,return,risk,dr";
  for (const auto& id : sample.asset_ids) csv << ",w_" << io::csv_escape(id);
  csv << '\n';
  nlohmann::json diag = nlohmann::json::array();

  for (auto id : ids) {
    strategies::StrategyConfig scfg;
    scfg.epsilon = cfg.epsilon;
    scfg.alpha = cfg.alpha;
    scfg.target_return = resolve_target(cfg, id, sample);
    auto res = strategies::run_strategy(id, sample, scfg);
    const VectorXd& w = res.portfolio->weights();
    const double ret = scenarios::mean_returns(sample).dot(w);
    csv << strategies::to_string(id) << ',' << io::format_double(ret) << ',';
    nlohmann::json entry;
    entry["strategy"] = strategies::to_string(id);
    if (res.outcome) {
      csv << io::format_double(res.outcome->achieved_risk) << ',';
      if (res.outcome->achieved_dr) csv << io::format_double(*res.outcome->achieved_dr);
      entry["status"] = solver::to_string(res.outcome->status);
      entry["iterations"] = res.outcome->iterations;
      entry["kkt_residual"] = res.outcome->kkt_residual;
      entry["objective"] = res.outcome->solver_objective;
      entry["normalization_residual"] = res.outcome->normalization_residual;
      if (res.outcome->eta) entry["eta"] = *res.outcome->eta;
      if (res.outcome->achieved_dr) entry["dr"] = *res.outcome->achieved_dr;
    } else {
      // Closed-form strategies: report the measured risk under the
      // configured measure.
      csv << io::format_double(risk::portfolio_risk(sample, w, measure_spec(cfg))) << ',';
      entry["status"] = "closed_form";
    }
    for (Index j = 0; j < w.size(); ++j) csv << ',' << io::format_double(w[j]);
    csv << '\n';
    diag.push_back(entry);
  }
  io::write_text_file(join_path(cfg.out_dir, "portfolios.csv"), hash, csv.str());
  io::write_text_file(join_path(cfg.out_dir, "portfolios.json"), hash, diag.dump(2) + "\n");
  return kOk;
}

int cmd_frontier(const RunConfig& cfg) {
  auto data = load_data(cfg);
  ensure_out_dir(cfg);
  const std::string hash = config_hash(cfg);
  const auto family =
      (cfg.family == "dr") ? optimizer::Family::DR : optimizer::Family::MinRisk;
  auto points = optimizer::frontier(data.returns, measure_spec(cfg), family, cfg.grid);

  std::ostringstream csv;
  csv << "eta,feasible," << (family == optimizer::Family::DR ? "dr" : "risk") << ",return";
  for (const auto& id : data.returns.asset_ids) csv << ",w_" << io::csv_escape(id);
  csv << '\n';
  for (const auto& pt : points) {
    csv << io::format_double(pt.eta) << ',' << (pt.feasible ? 1 : 0) << ',';
    if (pt.outcome) {
      csv << io::format_double(family == optimizer::Family::DR
                                   ? *pt.outcome->achieved_dr
                                   : pt.outcome->achieved_risk)
          << ',' << io::format_double(pt.outcome->achieved_return);
      for (Index j = 0; j < pt.outcome->portfolio.size(); ++j)
        csv << ',' << io::format_double(pt.outcome->portfolio[j]);
    } else {
      csv << ',';
      for (Index j = 0; j < data.returns.assets(); ++j) csv << ',';
    }
    csv << '\n';
  }
  io::write_text_file(join_path(cfg.out_dir, "frontier.csv"), hash, csv.str());
  return kOk;
}

namespace {

backtest::BacktestConfig to_backtest_config(const RunConfig& cfg) {
  backtest::BacktestConfig bt;
  bt.in_len = cfg.in_len;
  bt.hold_len = cfg.hold_len;
  bt.epsilon = cfg.epsilon;
  bt.alpha = cfg.alpha;
  bt.strategies = parse_strategy_list(cfg);
  if (!cfg.index_col.empty()) bt.index_column = cfg.index_col;
  bt.strict_turnover = cfg.strict_turnover;
  return bt;
}

void write_backtest_outputs(const RunConfig& cfg, const backtest::BacktestResult& result,
                            const std::vector<std::string>& return_dates) {
  const std::string hash = config_hash(cfg);

  std::vector<const backtest::StrategySeries*> live;
  for (const auto& s : result.series)
    if (!s.failed) live.push_back(&s);

  const Index out_len =
      result.plan.windows.empty() ? 0 : result.plan.windows.back().out_end - cfg.in_len;

  std::ostringstream returns_csv;
  returns_csv << "date";
  for (auto* s : live) returns_csv << ',' << strategies::to_string(s->id);
  returns_csv << '\n';
  for (Index t = 0; t < out_len; ++t) {
    returns_csv << return_dates[static_cast<std::size_t>(cfg.in_len + t)];
    for (auto* s : live)
      returns_csv << ',' << io::format_double(s->out_returns[static_cast<std::size_t>(t)]);
    returns_csv << '\n';
  }
  io::write_text_file(join_path(cfg.out_dir, "out_returns.csv"), hash, returns_csv.str());

  std::ostringstream wealth_csv;
  wealth_csv << "date";
  for (auto* s : live) wealth_csv << ',' << strategies::to_string(s->id);
  wealth_csv << '\n';
  // Row 0 is inception wealth (W = 1) dated at the last in-sample day.
  for (Index t = 0; t <= out_len; ++t) {
    wealth_csv << return_dates[static_cast<std::size_t>(cfg.in_len + t - 1)];
    for (auto* s : live) {
      const auto& w = s->index_passthrough ? std::vector<double>() : s->wealth;
      if (s->index_passthrough) {
        double acc = 1.0;
        for (Index k = 0; k < t; ++k) acc *= 1.0 + s->out_returns[static_cast<std::size_t>(k)];
        wealth_csv << ',' << io::format_double(acc);
      } else {
        wealth_csv << ',' << io::format_double(w[static_cast<std::size_t>(t)]);
      }
    }
    wealth_csv << '\n';
  }
  io::write_text_file(join_path(cfg.out_dir, "wealth.csv"), hash, wealth_csv.str());

  std::ostringstream reb_csv;
  reb_csv << "window,strategy";
  for (const auto& id : result.asset_ids) reb_csv << ',' << io::csv_escape(id);
  reb_csv << '\n';
  for (std::size_t w = 0; w < result.plan.windows.size(); ++w) {
    for (auto* s : live) {
      if (s->index_passthrough) continue;
      reb_csv << w << ',' << strategies::to_string(s->id);
      const VectorXd& weights = s->rebalances[w];
      for (Index j = 0; j < weights.size(); ++j)
        reb_csv << ',' << io::format_double(weights[j]);
      reb_csv << '\n';
    }
  }
  io::write_text_file(join_path(cfg.out_dir, "rebalances.csv"), hash, reb_csv.str());

  metrics::TableOptions opts;
  opts.strict_turnover = cfg.strict_turnover;
  auto table = metrics::build_metric_table(result, opts);
  io::write_text_file(join_path(cfg.out_dir, "metrics.csv"), hash,
                      metrics::table_to_csv(table));
  io::write_text_file(join_path(cfg.out_dir, "metrics.txt"), hash,
                      metrics::table_to_text(table));
  io::write_text_file(join_path(cfg.out_dir, "metrics_ranks.csv"), hash,
                      metrics::ranks_to_csv(table));

  if (!result.warnings.empty()) {
    std::ostringstream warn;
    for (const auto& w : result.warnings) warn << w << '\n';
    io::write_text_file(join_path(cfg.out_dir, "warnings.txt"), hash, warn.str());
    for (const auto& w : result.warnings) std::cerr << "warning: " << w << '\n';
  }
}

}  // namespace

int cmd_backtest(const RunConfig& cfg) {
  auto data = load_data(cfg);
  ensure_out_dir(cfg);
  auto result = backtest::run_backtest(data.returns, to_backtest_config(cfg));
  write_backtest_outputs(cfg, result, data.return_dates);
  return kOk;
}

int cmd_report(const RunConfig& cfg) {
  // Rebuild the metric table from a persisted backtest directory; data_path
  // names that directory.
  const std::string dir = cfg.data_path;
  auto read_table = [](const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::invalid_argument("cannot open: " + path);
    std::vector<io::CsvRecord> rows;
    io::CsvRecord rec;
    std::size_t line = 0;
    while (io::read_csv_record(in, rec, line)) rows.push_back(rec);
    if (rows.empty()) throw std::invalid_argument("empty file: " + path);
    return rows;
  };

  const auto returns_rows = read_table(join_path(dir, "out_returns.csv"));
  const auto& header = returns_rows.front();
  if (header.size() < 2 || header[0] != "date")
    throw std::invalid_argument("out_returns.csv: unexpected header");

  backtest::BacktestResult result;
  const std::size_t n_strategies = header.size() - 1;
  result.series.resize(n_strategies);
  for (std::size_t k = 0; k < n_strategies; ++k) {
    auto id = strategies::parse_strategy(header[k + 1]);
    if (!id) throw std::invalid_argument("unknown strategy column: " + header[k + 1]);
    result.series[k].id = *id;
    result.series[k].index_passthrough = (*id == strategies::StrategyId::Index);
  }
  for (std::size_t r = 1; r < returns_rows.size(); ++r) {
    if (returns_rows[r].size() != header.size())
      throw std::invalid_argument("out_returns.csv: ragged row " + std::to_string(r));
    for (std::size_t k = 0; k < n_strategies; ++k)
      result.series[k].out_returns.push_back(std::stod(returns_rows[r][k + 1]));
  }
  for (auto& s : result.series) {
    if (s.index_passthrough) {
      result.has_index = true;
      result.index_out_returns = s.out_returns;
    } else {
      s.wealth.assign(1, 1.0);
      for (double r : s.out_returns) s.wealth.push_back(s.wealth.back() * (1.0 + r));
    }
  }

  const auto reb_rows = read_table(join_path(dir, "rebalances.csv"));
  std::map<std::string, std::size_t> by_name;
  for (std::size_t k = 0; k < n_strategies; ++k)
    by_name[strategies::to_string(result.series[k].id)] = k;
  for (std::size_t r = 1; r < reb_rows.size(); ++r) {
    const auto& row = reb_rows[r];
    if (row.size() < 3) throw std::invalid_argument("rebalances.csv: short row");
    auto it = by_name.find(row[1]);
    if (it == by_name.end()) continue;  // strategy not in the returns file
    VectorXd w(static_cast<Index>(row.size() - 2));
    for (std::size_t j = 2; j < row.size(); ++j)
      w[static_cast<Index>(j - 2)] = std::stod(row[j]);
    result.series[it->second].rebalances.push_back(w);
  }

  ensure_out_dir(cfg);
  const std::string hash = config_hash(cfg);
  metrics::TableOptions opts;
  opts.strict_turnover = cfg.strict_turnover;
  auto table = metrics::build_metric_table(result, opts);
  io::write_text_file(join_path(cfg.out_dir, "metrics.csv"), hash,
                      metrics::table_to_csv(table));
  io::write_text_file(join_path(cfg.out_dir, "metrics.txt"), hash,
                      metrics::table_to_text(table));
  io::write_text_file(join_path(cfg.out_dir, "metrics_ranks.csv"), hash,
                      metrics::ranks_to_csv(table));
  return kOk;
}

int run_command(const RunConfig& cfg) {
  try {
    cfg.validate();
    if (cfg.command == "ingest") return cmd_ingest(cfg);
    if (cfg.command == "optimize") return cmd_optimize(cfg);
    if (cfg.command == "frontier") return cmd_frontier(cfg);
    if (cfg.command == "backtest") return cmd_backtest(cfg);
    return cmd_report(cfg);
  } catch (const optimizer::InfeasibleTargetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInfeasibleTarget;
  } catch (const optimizer::SolverFailureError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const optimizer::SchaiblePositivityError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const scenarios::LoadError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
}

}  // namespace maxdiv::cli
