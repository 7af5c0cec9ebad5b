#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace maxdiv::scenarios {

/// Raised on any data-ingestion problem; the message names the offending
/// row/column. Bad data is rejected, never silently filled.
class LoadError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Adjusted price history: one row per date, one column per asset.
/// Invariants enforced on construction via validate(): strictly positive
/// prices, strictly increasing dates, no missing cells.
struct PriceSeries {
  std::vector<std::string> dates;      // ISO-8601, strictly increasing
  Eigen::MatrixXd prices;              // T_p x n, all entries > 0
  std::vector<std::string> asset_ids;  // column labels, order preserved

  Eigen::Index rows() const { return prices.rows(); }
  Eigen::Index assets() const { return prices.cols(); }
};

/// T historical return realizations per asset, each scenario carrying
/// probability exactly 1/T.
struct ScenarioMatrix {
  Eigen::MatrixXd returns;  // T x n
  std::vector<std::string> asset_ids;

  Eigen::Index observations() const { return returns.rows(); }
  Eigen::Index assets() const { return returns.cols(); }
  double scenario_probability() const {
    return 1.0 / static_cast<double>(returns.rows());
  }
};

struct Window {
  Eigen::Index in_start = 0;
  Eigen::Index in_end = 0;   // exclusive
  Eigen::Index out_start = 0;
  Eigen::Index out_end = 0;  // exclusive
};

/// Rolling in-sample / out-of-sample index plan. The out ranges tile
/// [in_len, T) with no gaps or overlaps; each out range immediately follows
/// its in range.
struct WindowPlan {
  Eigen::Index in_len = 0;
  Eigen::Index hold_len = 0;
  std::vector<Window> windows;
};

/// Parses a header-bearing CSV: first column dates, one asset per remaining
/// column. Throws LoadError naming the row/column on malformed rows,
/// non-positive prices, duplicate or non-increasing dates, or ragged rows.
PriceSeries load_prices(std::istream& source);
PriceSeries load_prices_file(const std::string& path);

/// Linear returns r_t = P_t/P_{t-1} - 1; output has T_p - 1 rows.
/// Throws LoadError("insufficient history") when fewer than two rows.
ScenarioMatrix to_returns(const PriceSeries& p);

/// Per-asset sample mean, 1/T weighting.
Eigen::VectorXd mean_returns(const ScenarioMatrix& s);

/// Sample covariance about the mean with 1/T normalization (the scenarios
/// are equally probable, so the population convention applies). Symmetric
/// by construction.
Eigen::MatrixXd covariance(const ScenarioMatrix& s);

/// Rolling-window plan: first in-range is [0, in_len); out ranges have
/// length hold_len with the final one truncated at T.
/// Throws std::invalid_argument when T <= in_len ("no out-of-sample period")
/// or hold_len < 1.
WindowPlan plan_windows(Eigen::Index total, Eigen::Index in_len, Eigen::Index hold_len);

/// Row slice [begin, end) as a standalone scenario set.
ScenarioMatrix slice(const ScenarioMatrix& s, Eigen::Index begin, Eigen::Index end);

/// Drops one column (used to separate a benchmark-index column from the
/// tradable universe).
ScenarioMatrix drop_column(const ScenarioMatrix& s, Eigen::Index col);

/// Serializes a returns matrix (or any labeled matrix with a date column)
/// back to CSV for inspection.
std::string returns_to_csv(const ScenarioMatrix& s, const std::vector<std::string>& dates);
std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& labels);

}  // namespace maxdiv::scenarios
