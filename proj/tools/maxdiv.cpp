#include <CLI11.hpp>

#include "maxdiv/cli.hpp"

namespace {

using maxdiv::cli::RunConfig;

void add_data_options(CLI::App* cmd, RunConfig& cfg, const char* data_help) {
  cmd->add_option("--data", cfg.data_path, data_help)->required();
  cmd->add_option("--out", cfg.out_dir, "Output directory (default: current)");
}

void add_measure_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--measure", cfg.measure, "Risk measure: vol, mad, cvar, expectile");
  cmd->add_option("--epsilon", cfg.epsilon, "CVaR tail level (default 0.05)");
  cmd->add_option("--alpha", cfg.alpha, "Expectile level (default 0.9)");
}

void add_eta_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--eta-mode", cfg.eta_mode, "Return target mode: none, frac, abs");
  cmd->add_option("--eta", cfg.eta, "Target return (abs) or fraction in [0,1] (frac)");
}

void add_strategy_options(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--strategies", cfg.strategies,
                  "Comma-separated strategy list (default: the full catalog)")
      ->delimiter(',');
  cmd->add_option("--index-col", cfg.index_col,
                  "Column holding the benchmark index (excluded from the universe)");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"diversification-ratio portfolio construction and backtesting"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name
  app.set_config("--config", "", "Key-value config file; command-line flags override it");
  app.allow_config_extras(false);

  RunConfig cfg;
  app.add_option("--seed", cfg.seed, "Seed recorded in output hashes")->configurable(true);

  auto* ingest = app.add_subcommand("ingest", "Convert a price CSV into returns");
  add_data_options(ingest, cfg, "Price CSV (header: date,<asset>,...)");
  ingest->add_flag("--summary", cfg.print_summary, "Print the per-asset summary table");

  auto* optimize = app.add_subcommand("optimize", "Fit portfolios on the full sample");
  add_data_options(optimize, cfg, "Price CSV (header: date,<asset>,...)");
  add_measure_options(optimize, cfg);
  add_eta_options(optimize, cfg);
  add_strategy_options(optimize, cfg);

  auto* frontier = app.add_subcommand("frontier", "Trace the efficient frontier");
  add_data_options(frontier, cfg, "Price CSV (header: date,<asset>,...)");
  add_measure_options(frontier, cfg);
  frontier->add_option("--grid", cfg.grid, "Number of equally spaced targets (>= 2)");
  frontier->add_option("--family", cfg.family, "dr (max ratio) or minrisk");

  auto* backtest = app.add_subcommand("backtest", "Rolling-window evaluation");
  add_data_options(backtest, cfg, "Price CSV (header: date,<asset>,...)");
  add_measure_options(backtest, cfg);
  add_strategy_options(backtest, cfg);
  backtest->add_option("--in-len", cfg.in_len, "In-sample window length (default 500)");
  backtest->add_option("--hold-len", cfg.hold_len, "Holding period length (default 20)");
  backtest->add_flag("--strict-turnover", cfg.strict_turnover,
                     "Count the first rebalance as a full buy and divide by S");

  auto* report = app.add_subcommand("report", "Metric table from a backtest directory");
  add_data_options(report, cfg, "Backtest output directory");
  report->add_flag("--strict-turnover", cfg.strict_turnover,
                   "Count the first rebalance as a full buy and divide by S");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? maxdiv::cli::kOk : maxdiv::cli::kInputError;
  }

  for (auto* sub : {ingest, optimize, frontier, backtest, report})
    if (sub->parsed()) cfg.command = sub->get_name();
  return maxdiv::cli::run_command(cfg);
}
