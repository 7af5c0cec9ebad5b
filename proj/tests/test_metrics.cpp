#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "maxdiv/metrics.hpp"
#include "support.hpp"

using namespace maxdiv;
using namespace maxdiv::metrics;

TEST_CASE("sharpe") {
  CHECK_FALSE(sharpe({0.001, 0.001, 0.001}).has_value());  // zero deviation
  CHECK(*sharpe({0.02, -0.02}) == doctest::Approx(0.0).epsilon(1e-15));
  // mean 0.001, population stdev 0.02 -> 0.05
  std::vector<double> r = {0.021, -0.019};
  CHECK(*sharpe(r) == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("drawdown_stats golden values") {
  auto [mdd0, ulcer0] = drawdown_stats({1.0, 1.1, 1.2, 1.3});
  CHECK(mdd0 == 0.0);
  CHECK(ulcer0 == 0.0);

  auto [mdd1, ulcer1] = drawdown_stats({1.0, 0.8, 1.0});
  CHECK(mdd1 == doctest::Approx(-0.2).epsilon(1e-15));

  // DD series {0, -0.1, 0}: ulcer = sqrt(0.01/3)
  auto [mdd2, ulcer2] = drawdown_stats({1.0, 0.9, 1.0});
  CHECK(mdd2 == doctest::Approx(-0.1).epsilon(1e-15));
  CHECK(ulcer2 == doctest::Approx(std::sqrt(0.01 / 3.0)).epsilon(1e-12));
  CHECK(ulcer2 == doctest::Approx(0.05774).epsilon(1e-4));

  CHECK_THROWS_AS(drawdown_stats({}), std::invalid_argument);
  CHECK_THROWS_AS(drawdown_stats({1.0, -0.2}), std::invalid_argument);
}

TEST_CASE("drawdown invariant to appending a strictly-new-peak suffix") {
  std::vector<double> wealth = {1.0, 0.95, 1.05, 0.9, 1.1};
  auto [mdd, ulcer] = drawdown_stats(wealth);
  std::vector<double> extended = wealth;
  extended.push_back(1.2);
  extended.push_back(1.3);
  auto [mdd2, ulcer2] = drawdown_stats(extended);
  CHECK(mdd2 == mdd);
  // Ulcer denominator grows with the path; compare the sums of squares.
  CHECK(ulcer2 * ulcer2 * 7.0 == doctest::Approx(ulcer * ulcer * 5.0).epsilon(1e-12));
}

TEST_CASE("rachev10 golden values") {
  // N=10, j=1: best 0.02, worst -0.01 -> 2.0
  std::vector<double> r(9, -0.01);
  r.push_back(0.02);
  CHECK(*rachev10(r) == doctest::Approx(2.0).epsilon(1e-12));

  // Symmetric sample: ratio 1.
  std::vector<double> sym = {-0.02, -0.01, -0.005, 0.005, 0.01, 0.02};
  CHECK(*rachev10(sym) == doctest::Approx(1.0).epsilon(1e-12));

  // All positive equal: sign preserved -> -1.
  std::vector<double> pos(10, 0.004);
  CHECK(*rachev10(pos) == doctest::Approx(-1.0).epsilon(1e-12));

  CHECK_FALSE(rachev10({0.01, 0.02}).has_value());  // j = 0
}

TEST_CASE("jensen alpha and information ratio") {
  std::mt19937_64 rng(70);
  std::normal_distribution<double> normal(0.0005, 0.01);
  std::vector<double> index(40);
  for (auto& v : index) v = normal(rng);

  auto [alpha_same, info_same] = jensen_alpha_info(index, index);
  CHECK(*alpha_same == doctest::Approx(0.0).epsilon(1e-15));
  CHECK_FALSE(info_same.has_value());  // zero tracking deviation

  std::vector<double> lever(index);
  for (auto& v : lever) v *= 2.0;
  auto [alpha_lever, info_lever] = jensen_alpha_info(lever, index);
  CHECK(*alpha_lever == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(info_lever.has_value());  // beta 2 portfolio tracks with deviation

  std::vector<double> shifted(index);
  for (auto& v : shifted) v += 0.001;
  auto [alpha_shift, info_shift] = jensen_alpha_info(shifted, index);
  CHECK(*alpha_shift == doctest::Approx(0.001).epsilon(1e-12));
  CHECK_FALSE(info_shift.has_value());  // constant difference
}

TEST_CASE("var5 golden values") {
  std::vector<double> r(20, 0.01);
  r[7] = -0.03;
  CHECK(*var5(r) == doctest::Approx(0.03).epsilon(1e-15));  // j=1, worst -0.03

  std::vector<double> flat(20, 0.01);
  CHECK(*var5(flat) == doctest::Approx(-0.01).epsilon(1e-15));

  std::vector<double> sym = {-0.04, -0.02, 0.0, 0.02, 0.04, -0.01, 0.01, 0.03, -0.03, 0.0};
  CHECK(*var5(sym) == doctest::Approx(0.04).epsilon(1e-15));  // extreme order statistic

  CHECK_FALSE(var5({0.01, -0.01}).has_value());
}

TEST_CASE("omega golden values") {
  CHECK(*omega({0.02, -0.01}) == doctest::Approx(2.0).epsilon(1e-12));
  std::vector<double> sym = {-0.03, -0.01, 0.01, 0.03};
  CHECK(*omega(sym) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_FALSE(omega({0.01, 0.02}).has_value());  // empty loss tail
}

TEST_CASE("roi_series golden values") {
  auto roi = roi_series({0.1, 0.0, 0.0}, 2);
  REQUIRE(roi.series.size() == 2);
  CHECK(roi.series[0] == doctest::Approx(0.10).epsilon(1e-12));
  CHECK(roi.series[1] == doctest::Approx(0.0).epsilon(1e-15));

  // Constant return: ROI = (1+c)^h - 1 everywhere, all percentiles equal.
  std::vector<double> constant(10, 0.01);
  auto roic = roi_series(constant, 5);
  REQUIRE(roic.summary.has_value());
  const double expected = std::pow(1.01, 5) - 1.0;
  for (double v : roic.series) CHECK(v == doctest::Approx(expected).epsilon(1e-12));
  CHECK(roic.summary->p5 == doctest::Approx(expected).epsilon(1e-12));
  CHECK(roic.summary->p95 == doctest::Approx(expected).epsilon(1e-12));
  CHECK(roic.summary->vol == doctest::Approx(0.0).epsilon(1e-12));

  auto zero = roi_series(std::vector<double>(8, 0.0), 4);
  for (double v : zero.series) CHECK(v == 0.0);

  CHECK_FALSE(roi_series({0.01, 0.02}, 2).summary.has_value());  // too short
}

TEST_CASE("roi percentiles interpolate linearly") {
  std::vector<double> r = {0.30, -0.10, 0.20, 0.05, -0.02, 0.08};
  auto roi = roi_series(r, 2);  // 5 rolling values: odd count, exact median
  REQUIRE(roi.series.size() == 5);
  REQUIRE(roi.summary.has_value());
  std::vector<double> sorted(roi.series);
  std::sort(sorted.begin(), sorted.end());
  CHECK(roi.summary->p50 == doctest::Approx(sorted[2]).epsilon(1e-12));
  // rank = 0.05 * 4 = 0.2: between the two smallest order statistics.
  CHECK(roi.summary->p5 ==
        doctest::Approx(0.8 * sorted[0] + 0.2 * sorted[1]).epsilon(1e-12));
  CHECK(roi.summary->p95 ==
        doctest::Approx(0.2 * sorted[3] + 0.8 * sorted[4]).epsilon(1e-12));
}

TEST_CASE("ave_count") {
  using Eigen::VectorXd;
  std::vector<VectorXd> uniform(3, VectorXd::Constant(28, 1.0 / 28.0));
  CHECK(ave_count(uniform) == doctest::Approx(28.0));

  std::vector<VectorXd> single(4, (VectorXd(3) << 1.0, 0.0, 0.0).finished());
  CHECK(ave_count(single) == doctest::Approx(1.0));

  VectorXd two = (VectorXd(4) << 0.5, 0.5, 0.0, 0.0).finished();
  VectorXd four = VectorXd::Constant(4, 0.25);
  CHECK(ave_count({two, four}) == doctest::Approx(3.0));

  // Dust below the threshold does not count as selected.
  VectorXd dusty = (VectorXd(3) << 1.0 - 2e-6, 1e-6, 1e-6).finished();
  CHECK(ave_count({dusty}) == doctest::Approx(1.0));
}

TEST_CASE("scale property: ratios unchanged, quantiles scale") {
  std::mt19937_64 rng(71);
  std::normal_distribution<double> normal(0.0003, 0.012);
  std::vector<double> r(60), index(60);
  for (auto& v : r) v = normal(rng);
  for (auto& v : index) v = normal(rng);
  const double k = 3.25;
  std::vector<double> rk(r), indexk(index);
  for (auto& v : rk) v *= k;
  for (auto& v : indexk) v *= k;

  CHECK(*sharpe(rk) == doctest::Approx(*sharpe(r)).epsilon(1e-12));
  CHECK(*rachev10(rk) == doctest::Approx(*rachev10(r)).epsilon(1e-12));
  CHECK(*omega(rk) == doctest::Approx(*omega(r)).epsilon(1e-12));
  auto [a1, i1] = jensen_alpha_info(r, index);
  auto [a2, i2] = jensen_alpha_info(rk, indexk);
  CHECK(*i2 == doctest::Approx(*i1).epsilon(1e-12));
  CHECK(*var5(rk) == doctest::Approx(k * *var5(r)).epsilon(1e-12));
}

TEST_CASE("metric table from a backtest run") {
  std::mt19937_64 rng(72);
  auto s = testsup::random_scenarios(80, 4, rng);
  s.asset_ids[3] = "INDEX";
  backtest::BacktestConfig cfg;
  cfg.in_len = 40;
  cfg.hold_len = 10;
  cfg.epsilon = 0.1;
  cfg.index_column = "INDEX";
  cfg.strategies = {strategies::StrategyId::EW, strategies::StrategyId::MV0,
                    strategies::StrategyId::Index};
  auto result = backtest::run_backtest(s, cfg);
  auto table = build_metric_table(result);
  REQUIRE(table.rows.size() == 3);

  const auto& ew = table.rows[0];
  CHECK(ew.name == "EW");
  CHECK(*ew.turnover == 0.0);
  CHECK(*ew.ave_count == doctest::Approx(3.0));
  CHECK(ew.alpha_j.has_value());
  CHECK_FALSE(ew.roi.has_value());  // 40 observations < 250 horizon

  const auto& index_row = table.rows[2];
  CHECK(index_row.name == "Index");
  CHECK_FALSE(index_row.turnover.has_value());
  CHECK_FALSE(index_row.ave_count.has_value());
  CHECK_FALSE(index_row.alpha_j.has_value());
  CHECK(index_row.mdd.has_value());

  auto csv = table_to_csv(table);
  CHECK(csv.find("strategy,mu_out") == 0);
  // Every data cell is either empty or a finite number.
  std::istringstream lines(csv);
  std::string line;
  std::getline(lines, line);  // header
  while (std::getline(lines, line)) {
    std::istringstream cells(line);
    std::string cell;
    std::getline(cells, cell, ',');  // strategy name
    while (std::getline(cells, cell, ',')) {
      if (cell.empty()) continue;
      CHECK(std::isfinite(std::stod(cell)));
    }
  }

  auto text = table_to_text(table);
  CHECK(text.find("EW") != std::string::npos);
  CHECK(text.find('-') != std::string::npos);

  auto ranks = ranks_to_csv(table);
  CHECK(ranks.find("strategy,") == 0);
  // EW and MV0 are ranked on mu; Index is too; ranks are in 1..3.
  CHECK(ranks.find("nan") == std::string::npos);
}

TEST_CASE("every metric is a number or absent, never NaN") {
  // Adversarial series: constants, all-positive, single value.
  std::vector<std::vector<double>> cases = {
      std::vector<double>(30, 0.01),
      {0.02},
      std::vector<double>(12, 0.0),
  };
  for (const auto& r : cases) {
    for (auto v : {sharpe(r), rachev10(r), var5(r), omega(r)}) {
      if (v) CHECK(std::isfinite(*v));
    }
  }
}
