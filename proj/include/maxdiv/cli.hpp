#pragma once

#include <string>
#include <vector>

#include "maxdiv/backtest.hpp"
#include "maxdiv/metrics.hpp"

namespace maxdiv::cli {

/// Exit codes shared by every subcommand.
constexpr int kOk = 0;
constexpr int kInputError = 2;
constexpr int kInfeasibleTarget = 3;
constexpr int kSolverFailure = 4;

/// Fully resolved run parameters; validated before any computation.
struct RunConfig {
  std::string command;                   // ingest|optimize|frontier|backtest|report
  std::string data_path;
  std::string out_dir = ".";
  std::string measure = "vol";           // vol|mad|cvar|expectile
  double epsilon = 0.05;
  double alpha = 0.9;
  long in_len = 500;
  long hold_len = 20;
  std::string eta_mode = "none";         // none|frac|abs
  double eta = 0.0;
  int grid = 10;
  std::string family = "dr";             // dr|minrisk (frontier)
  std::vector<std::string> strategies;   // empty = full catalog
  std::string index_col;                 // empty = none
  bool strict_turnover = false;
  bool print_summary = false;
  unsigned long seed = 0;                // recorded in the config hash only

  void validate() const;                 // throws std::invalid_argument
  std::string canonical() const;         // the hashed reproducibility string
};

risk::RiskSpec measure_spec(const RunConfig& cfg);

/// Price CSV -> returns CSV + per-asset summary (n, T, mean, stdev).
int cmd_ingest(const RunConfig& cfg);

/// One portfolio per requested strategy on the full sample; weights plus
/// diagnostics in CSV and JSON form.
int cmd_optimize(const RunConfig& cfg);

/// Efficient-frontier trace for the configured measure and family.
int cmd_frontier(const RunConfig& cfg);

/// Rolling-window evaluation; persists returns/wealth/rebalances and the
/// metric table (CSV, aligned text, rank CSV).
int cmd_backtest(const RunConfig& cfg);

/// Rebuilds the metric table from a backtest output directory.
int cmd_report(const RunConfig& cfg);

/// Dispatch on cfg.command with the exit-code contract applied.
int run_command(const RunConfig& cfg);

}  // namespace maxdiv::cli
