#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "maxdiv/cli.hpp"
#include "support.hpp"

using namespace maxdiv;
using namespace maxdiv::cli;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("maxdiv_test_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string str(const std::string& name = "") const { return (path / name).string(); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Random-walk price CSV; the last column can serve as an index.
void write_price_csv(const std::string& path, int days, int assets, unsigned seed,
                     bool with_index = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> step(-0.02, 0.022);
  std::ofstream out(path);
  out << "date";
  for (int j = 0; j < assets; ++j) out << ",S" << j;
  if (with_index) out << ",INDEX";
  out << "\n";
  std::vector<double> prices(static_cast<std::size_t>(assets) + (with_index ? 1 : 0), 100.0);
  for (int d = 0; d <= days; ++d) {
    char date[16];
    std::snprintf(date, sizeof(date), "%04d-%02d-%02d", 2018 + d / 336, 1 + (d / 28) % 12,
                  1 + d % 28);
    out << date;
    for (auto& p : prices) {
      out << ',' << p;
      p *= 1.0 + step(rng);
    }
    out << "\n";
  }
}

RunConfig base_config(const TempDir& dir, const std::string& command) {
  RunConfig cfg;
  cfg.command = command;
  cfg.data_path = dir.str("prices.csv");
  cfg.out_dir = dir.str("out");
  return cfg;
}

}  // namespace

TEST_CASE("config validation rejects bad values") {
  RunConfig cfg;
  cfg.command = "nope";
  cfg.data_path = "x";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.command = "ingest";
  cfg.measure = "variance";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.measure = "vol";
  cfg.epsilon = 1.5;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.epsilon = 0.05;
  CHECK_NOTHROW(cfg.validate());
}

TEST_CASE("ingest writes returns and summary") {
  TempDir dir;
  write_price_csv(dir.str("prices.csv"), 10, 2, 1);
  auto cfg = base_config(dir, "ingest");
  CHECK(run_command(cfg) == kOk);

  auto returns = read_file(dir.str("out/returns.csv"));
  CHECK(returns.rfind("# config ", 0) == 0);
  CHECK(returns.find("date,S0,S1") != std::string::npos);
  // 11 price rows -> 10 return rows (+ header + hash line).
  CHECK(std::count(returns.begin(), returns.end(), '\n') == 12);

  auto summary = read_file(dir.str("out/summary.csv"));
  CHECK(summary.find("asset,mean,stdev") != std::string::npos);
  CHECK(summary.find("# assets 2, observations 10") != std::string::npos);
}

TEST_CASE("ingest propagates load errors as exit code 2") {
  TempDir dir;
  std::ofstream(dir.str("prices.csv")) << "date,A\n2020-01-01,100\n2020-01-02,0\n";
  auto cfg = base_config(dir, "ingest");
  CHECK(run_command(cfg) == kInputError);
}

TEST_CASE("optimize writes one row per strategy") {
  TempDir dir;
  write_price_csv(dir.str("prices.csv"), 60, 3, 2);
  auto cfg = base_config(dir, "optimize");
  cfg.strategies = {"EW", "MV0", "RP"};
  CHECK(run_command(cfg) == kOk);
  auto csv = read_file(dir.str("out/portfolios.csv"));
  CHECK(csv.find("strategy,return,risk,dr,w_S0,w_S1,w_S2") != std::string::npos);
  CHECK(csv.find("EW,") != std::string::npos);
  // EW weights are exactly one third.
  std::istringstream lines(csv);
  std::string line;
  bool saw_ew = false;
  while (std::getline(lines, line)) {
    if (line.rfind("EW,", 0) != 0) continue;
    saw_ew = true;
    std::istringstream cells(line);
    std::string cell;
    std::vector<std::string> parts;
    while (std::getline(cells, cell, ',')) parts.push_back(cell);
    REQUIRE(parts.size() == 7);
    for (int j = 4; j < 7; ++j)
      CHECK(std::stod(parts[static_cast<std::size_t>(j)]) ==
            doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  }
  CHECK(saw_ew);
  auto json_text = read_file(dir.str("out/portfolios.json"));
  CHECK(json_text.find("\"strategy\"") != std::string::npos);
}

TEST_CASE("optimize with an unattainable target exits with code 3") {
  TempDir dir;
  write_price_csv(dir.str("prices.csv"), 60, 3, 3);
  auto cfg = base_config(dir, "optimize");
  cfg.strategies = {"DRCVaR1"};
  cfg.epsilon = 0.1;
  cfg.eta_mode = "abs";
  cfg.eta = 0.5;  // far above any mean daily return
  CHECK(run_command(cfg) == kInfeasibleTarget);
}

TEST_CASE("frontier writes the fixed schema with both endpoints") {
  TempDir dir;
  write_price_csv(dir.str("prices.csv"), 80, 3, 4);
  auto cfg = base_config(dir, "frontier");
  cfg.grid = 2;
  cfg.family = "minrisk";
  CHECK(run_command(cfg) == kOk);
  auto csv = read_file(dir.str("out/frontier.csv"));
  CHECK(csv.find("eta,feasible,risk,return,w_S0,w_S1,w_S2") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 4);  // hash + header + 2 points

  cfg.family = "dr";
  cfg.grid = 5;
  CHECK(run_command(cfg) == kOk);
  auto dr_csv = read_file(dir.str("out/frontier.csv"));
  CHECK(dr_csv.find("eta,feasible,dr,return") != std::string::npos);
}

TEST_CASE("backtest writes the full output set and is byte-identical on rerun") {
  TempDir dir;
  write_price_csv(dir.str("prices.csv"), 90, 3, 5, /*with_index=*/true);
  auto cfg = base_config(dir, "backtest");
  cfg.in_len = 40;
  cfg.hold_len = 10;
  cfg.epsilon = 0.1;
  cfg.index_col = "INDEX";
  cfg.strategies = {"EW", "RP", "MV0", "DRvol0", "Index"};
  REQUIRE(run_command(cfg) == kOk);

  for (const char* name : {"out_returns.csv", "wealth.csv", "rebalances.csv", "metrics.csv",
                           "metrics.txt", "metrics_ranks.csv"})
    CHECK(fs::exists(dir.str(std::string("out/") + name)));

  auto metrics = read_file(dir.str("out/metrics.csv"));
  CHECK(metrics.find("EW,") != std::string::npos);
  CHECK(metrics.find("Index,") != std::string::npos);

  auto first = read_file(dir.str("out/out_returns.csv"));
  auto first_metrics = metrics;
  cfg.out_dir = dir.str("out2");
  REQUIRE(run_command(cfg) == kOk);
  CHECK(read_file(dir.str("out2/out_returns.csv")) == first);
  CHECK(read_file(dir.str("out2/metrics.csv")) == first_metrics);
}

TEST_CASE("report reproduces the backtest metric table") {
  TempDir dir;
  write_price_csv(dir.str("prices.csv"), 80, 3, 6, /*with_index=*/true);
  auto cfg = base_config(dir, "backtest");
  cfg.in_len = 40;
  cfg.hold_len = 20;
  cfg.epsilon = 0.1;
  cfg.index_col = "INDEX";
  cfg.strategies = {"EW", "MV0", "Index"};
  REQUIRE(run_command(cfg) == kOk);

  RunConfig rep;
  rep.command = "report";
  rep.data_path = dir.str("out");
  rep.out_dir = dir.str("report");
  REQUIRE(run_command(rep) == kOk);

  auto strip_hash = [](std::string text) {
    return text.substr(text.find('\n') + 1);
  };
  CHECK(strip_hash(read_file(dir.str("report/metrics.csv"))) ==
        strip_hash(read_file(dir.str("out/metrics.csv"))));
}

#ifdef MAXDIV_CLI_PATH
TEST_CASE("binary end-to-end: exit codes and help") {
  TempDir dir;
  write_price_csv(dir.str("prices.csv"), 12, 2, 7);
  const std::string exe = MAXDIV_CLI_PATH;
  auto run = [&](const std::string& args) {
    const std::string cmd = exe + " " + args + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return WEXITSTATUS(rc);
  };
  CHECK(run("--help") == 0);
  CHECK(run("ingest --data " + dir.str("prices.csv") + " --out " + dir.str("o1")) == 0);
  CHECK(run("ingest --data " + dir.str("missing.csv") + " --out " + dir.str("o2")) == 2);
  CHECK(run("definitely-not-a-command") == 2);
  CHECK(run("ingest") == 2);  // --data required

  // Config-file driven run with an unknown key is rejected.
  std::ofstream(dir.str("good.ini")) << "seed=7\n";
  CHECK(run("ingest --config " + dir.str("good.ini") + " --data " + dir.str("prices.csv") +
            " --out " + dir.str("o3")) == 0);
  std::ofstream(dir.str("bad.ini")) << "unknown_key=1\n";
  CHECK(run("ingest --config " + dir.str("bad.ini") + " --data " + dir.str("prices.csv") +
            " --out " + dir.str("o4")) == 2);
}
#endif
