#include "maxdiv/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "maxdiv/io.hpp"

namespace maxdiv::metrics {
namespace {

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double pop_stdev(const std::vector<double>& v) {
  const double m = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

// A deviation at round-off scale is a constant series; ratios built on it
// would be pure noise.
bool effectively_zero(double sd, double mean) {
  return sd <= 1e-12 * (1.0 + std::abs(mean));
}

std::ptrdiff_t tail_size(double level, std::size_t n) {
  return static_cast<std::ptrdiff_t>(std::floor(level * static_cast<double>(n) + 0.5));
}

// Linear interpolation between order statistics of a sorted sample.
double percentile_sorted(const std::vector<double>& sorted, double p) {
  const double rank = p * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  if (lo + 1 >= sorted.size()) return sorted.back();
  const double frac = rank - static_cast<double>(lo);
  return sorted[lo] * (1.0 - frac) + sorted[lo + 1] * frac;
}

}  // namespace

std::optional<double> sharpe(const std::vector<double>& returns) {
  if (returns.empty()) return std::nullopt;
  const double m = mean_of(returns);
  const double sd = pop_stdev(returns);
  if (effectively_zero(sd, m)) return std::nullopt;
  return m / sd;
}

std::pair<double, double> drawdown_stats(const std::vector<double>& wealth) {
  if (wealth.empty()) throw std::invalid_argument("drawdown_stats: empty wealth path");
  double peak = -std::numeric_limits<double>::infinity();
  double mdd = 0.0, acc = 0.0;
  for (double w : wealth) {
    if (!(w > 0.0)) throw std::invalid_argument("drawdown_stats: wealth must be positive");
    peak = std::max(peak, w);
    const double dd = (w - peak) / peak;
    mdd = std::min(mdd, dd);
    acc += dd * dd;
  }
  return {mdd, std::sqrt(acc / static_cast<double>(wealth.size()))};
}

std::optional<double> rachev10(const std::vector<double>& returns) {
  const std::ptrdiff_t j = tail_size(0.10, returns.size());
  if (j < 1) return std::nullopt;
  std::vector<double> sorted(returns);
  std::sort(sorted.begin(), sorted.end());
  double worst = 0.0, best = 0.0;
  for (std::ptrdiff_t k = 0; k < j; ++k) {
    worst += sorted[static_cast<std::size_t>(k)];
    best += sorted[sorted.size() - 1 - static_cast<std::size_t>(k)];
  }
  const double denominator = -worst / static_cast<double>(j);
  if (denominator == 0.0) return std::nullopt;
  return (best / static_cast<double>(j)) / denominator;
}

std::pair<std::optional<double>, std::optional<double>> jensen_alpha_info(
    const std::vector<double>& returns, const std::vector<double>& index_returns) {
  if (returns.size() != index_returns.size() || returns.empty())
    return {std::nullopt, std::nullopt};
  const double mr = mean_of(returns);
  const double mi = mean_of(index_returns);
  double cov = 0.0, var_i = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    cov += (returns[t] - mr) * (index_returns[t] - mi);
    var_i += (index_returns[t] - mi) * (index_returns[t] - mi);
  }
  std::optional<double> alpha;
  const double index_sd = std::sqrt(var_i / static_cast<double>(returns.size()));
  if (!effectively_zero(index_sd, mi)) alpha = mr - (cov / var_i) * mi;

  std::vector<double> diff(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) diff[t] = returns[t] - index_returns[t];
  const double diff_mean = mean_of(diff);
  const double sd = pop_stdev(diff);
  std::optional<double> info;
  if (!effectively_zero(sd, diff_mean)) info = diff_mean / sd;
  return {alpha, info};
}

std::optional<double> var5(const std::vector<double>& returns) {
  const std::ptrdiff_t j = tail_size(0.05, returns.size());
  if (j < 1) return std::nullopt;
  std::vector<double> sorted(returns);
  std::nth_element(sorted.begin(), sorted.begin() + (j - 1), sorted.end());
  return -sorted[static_cast<std::size_t>(j - 1)];
}

std::optional<double> omega(const std::vector<double>& returns, double eta) {
  if (returns.empty()) return std::nullopt;
  double gain = 0.0, loss = 0.0;
  for (double r : returns) {
    if (r > eta) gain += r - eta;
    else loss += eta - r;
  }
  if (!(loss > 0.0)) return std::nullopt;
  return gain / loss;
}

RoiResult roi_series(const std::vector<double>& returns, int horizon) {
  RoiResult out;
  if (horizon < 1) throw std::invalid_argument("roi_series: horizon must be >= 1");
  const auto n = static_cast<std::ptrdiff_t>(returns.size());
  if (n <= horizon) return out;
  for (std::ptrdiff_t tau = horizon; tau <= n; ++tau) {
    double growth = 1.0;
    for (std::ptrdiff_t t = tau - horizon; t < tau; ++t)
      growth *= 1.0 + returns[static_cast<std::size_t>(t)];
    out.series.push_back(growth - 1.0);
  }
  std::vector<double> sorted(out.series);
  std::sort(sorted.begin(), sorted.end());
  RoiSummary s;
  s.mean = mean_of(out.series);
  s.vol = pop_stdev(out.series);
  s.p5 = percentile_sorted(sorted, 0.05);
  s.p25 = percentile_sorted(sorted, 0.25);
  s.p50 = percentile_sorted(sorted, 0.50);
  s.p75 = percentile_sorted(sorted, 0.75);
  s.p95 = percentile_sorted(sorted, 0.95);
  out.summary = s;
  return out;
}

double ave_count(const std::vector<Eigen::VectorXd>& rebalances, double threshold) {
  if (rebalances.empty()) throw std::invalid_argument("ave_count: no rebalances");
  double total = 0.0;
  for (const auto& w : rebalances) total += static_cast<double>((w.array() > threshold).count());
  return total / static_cast<double>(rebalances.size());
}

MetricTable build_metric_table(const backtest::BacktestResult& result,
                               const TableOptions& options) {
  MetricTable table;
  for (const auto& series : result.series) {
    if (series.failed) continue;
    StrategyMetrics row;
    row.name = strategies::to_string(series.id);
    const auto& r = series.out_returns;
    if (!r.empty()) {
      row.mu_out = mean_of(r);
      row.sigma_out = pop_stdev(r);
      row.sharpe = sharpe(r);
      row.rachev10 = rachev10(r);
      row.var5 = var5(r);
      row.omega = omega(r);
      auto roi = roi_series(r, options.roi_horizon);
      row.roi = roi.summary;
    }
    if (series.index_passthrough) {
      // The benchmark path: wealth from its own returns, relative measures
      // left absent.
      std::vector<double> wealth{1.0};
      for (double ret : r) wealth.push_back(wealth.back() * (1.0 + ret));
      auto [mdd, ulcer] = drawdown_stats(wealth);
      row.mdd = mdd;
      row.ulcer = ulcer;
    } else {
      auto [mdd, ulcer] = drawdown_stats(series.wealth);
      row.mdd = mdd;
      row.ulcer = ulcer;
      row.turnover = backtest::turnover(series, options.strict_turnover);
      row.ave_count = ave_count(series.rebalances, options.count_threshold);
      if (result.has_index) {
        auto [alpha, info] = jensen_alpha_info(r, result.index_out_returns);
        row.alpha_j = alpha;
        row.info_ratio = info;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

namespace {

constexpr const char* kColumns[] = {"mu_out", "sigma_out", "sharpe",     "mdd",
                                    "ulcer",  "rachev10",  "turn",       "alpha_j",
                                    "info_ratio", "var5",  "omega",      "ave_count",
                                    "roi_mean", "roi_vol", "roi_p5",     "roi_p25",
                                    "roi_p50", "roi_p75",  "roi_p95"};

std::optional<double> cell_value(const StrategyMetrics& row, std::size_t col) {
  switch (col) {
    case 0: return row.mu_out;
    case 1: return row.sigma_out;
    case 2: return row.sharpe;
    case 3: return row.mdd;
    case 4: return row.ulcer;
    case 5: return row.rachev10;
    case 6: return row.turnover;
    case 7: return row.alpha_j;
    case 8: return row.info_ratio;
    case 9: return row.var5;
    case 10: return row.omega;
    case 11: return row.ave_count;
    default:
      if (!row.roi) return std::nullopt;
      switch (col) {
        case 12: return row.roi->mean;
        case 13: return row.roi->vol;
        case 14: return row.roi->p5;
        case 15: return row.roi->p25;
        case 16: return row.roi->p50;
        case 17: return row.roi->p75;
        case 18: return row.roi->p95;
        default: return std::nullopt;
      }
  }
}

// +1 higher is better, -1 lower is better, 0 unranked.
constexpr int kOrientation[] = {+1, -1, +1, +1, -1, +1, -1, +1, +1, -1, +1, 0,
                                +1, -1, +1, +1, +1, +1, +1};
constexpr std::size_t kColumnCount = std::size(kColumns);

}  // namespace

std::string table_to_csv(const MetricTable& table) {
  std::ostringstream out;
  out << "strategy";
  for (const char* c : kColumns) out << ',' << c;
  out << '\n';
  for (const auto& row : table.rows) {
    out << row.name;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      out << ',';
      if (auto v = cell_value(row, c)) out << io::format_double(*v);
    }
    out << '\n';
  }
  return out.str();
}

std::string table_to_text(const MetricTable& table) {
  constexpr int kNameWidth = 9;
  constexpr int kCellWidth = 12;
  std::ostringstream out;
  out << std::left;
  out.width(kNameWidth);
  out << "strategy";
  for (std::size_t c = 0; c < 12; ++c) {  // the per-period columns only
    out.width(kCellWidth);
    out << kColumns[c];
  }
  out << '\n';
  for (const auto& row : table.rows) {
    out.width(kNameWidth);
    out << row.name;
    for (std::size_t c = 0; c < 12; ++c) {
      char buf[32];
      if (auto v = cell_value(row, c)) std::snprintf(buf, sizeof(buf), "%.6g", *v);
      else std::snprintf(buf, sizeof(buf), "-");
      out.width(kCellWidth);
      out << buf;
    }
    out << '\n';
  }
  return out.str();
}

std::string ranks_to_csv(const MetricTable& table) {
  std::ostringstream out;
  out << "strategy";
  for (const char* c : kColumns) out << ',' << c;
  out << '\n';
  const std::size_t n = table.rows.size();
  for (std::size_t i = 0; i < n; ++i) {
    out << table.rows[i].name;
    for (std::size_t c = 0; c < kColumnCount; ++c) {
      out << ',';
      if (kOrientation[c] == 0) continue;
      auto mine = cell_value(table.rows[i], c);
      if (!mine) continue;
      int rank = 1;
      for (std::size_t k = 0; k < n; ++k) {
        if (k == i) continue;
        auto other = cell_value(table.rows[k], c);
        if (!other) continue;
        const bool better = (kOrientation[c] > 0) ? (*other > *mine) : (*other < *mine);
        if (better) ++rank;
      }
      out << rank;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace maxdiv::metrics
