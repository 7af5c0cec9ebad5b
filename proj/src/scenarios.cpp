#include "maxdiv/scenarios.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "maxdiv/io.hpp"

namespace maxdiv::scenarios {
namespace {

bool iso_date_like(const std::string& d) {
  // YYYY-MM-DD; dates are otherwise treated as opaque ordered identifiers.
  if (d.size() != 10 || d[4] != '-' || d[7] != '-') return false;
  for (std::size_t i : {0u, 1u, 2u, 3u, 5u, 6u, 8u, 9u})
    if (!std::isdigit(static_cast<unsigned char>(d[i]))) return false;
  return true;
}

double parse_price(const std::string& text, std::size_t row, std::size_t col) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  while (first != last && std::isspace(static_cast<unsigned char>(*first))) ++first;
  while (last != first && std::isspace(static_cast<unsigned char>(last[-1]))) --last;
  if (first == last)
    throw LoadError("missing price at row " + std::to_string(row) + ", column " +
                    std::to_string(col));
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last)
    throw LoadError("malformed price '" + text + "' at row " + std::to_string(row) +
                    ", column " + std::to_string(col));
  return value;
}

}  // namespace

PriceSeries load_prices(std::istream& source) {
  std::size_t line_no = 0;
  io::CsvRecord header;
  if (!io::read_csv_record(source, header, line_no))
    throw LoadError("empty input: expected a header row");
  if (header.size() < 2)
    throw LoadError("header must name a date column and at least one asset");

  PriceSeries out;
  out.asset_ids.assign(header.begin() + 1, header.end());
  const std::size_t n = out.asset_ids.size();
  for (std::size_t j = 0; j < n; ++j)
    if (out.asset_ids[j].empty())
      throw LoadError("empty asset name in header column " + std::to_string(j + 2));

  std::vector<std::vector<double>> rows;
  io::CsvRecord rec;
  std::size_t row_idx = 1;  // 1-based data row counter
  while (io::read_csv_record(source, rec, line_no)) {
    if (rec.size() != n + 1)
      throw LoadError("ragged row " + std::to_string(row_idx) + ": expected " +
                      std::to_string(n + 1) + " fields, got " + std::to_string(rec.size()));
    const std::string& date = rec[0];
    if (!iso_date_like(date))
      throw LoadError("invalid date '" + date + "' at row " + std::to_string(row_idx));
    if (!out.dates.empty()) {
      if (date == out.dates.back())
        throw LoadError("duplicate date '" + date + "' at row " + std::to_string(row_idx));
      if (date < out.dates.back())
        throw LoadError("non-increasing date '" + date + "' at row " + std::to_string(row_idx));
    }
    std::vector<double> prices_row(n);
    for (std::size_t j = 0; j < n; ++j) {
      double v = parse_price(rec[j + 1], row_idx, j + 2);
      if (!(v > 0.0))
        throw LoadError("non-positive price " + rec[j + 1] + " at row " +
                        std::to_string(row_idx) + ", column " + std::to_string(j + 2) +
                        " (" + out.asset_ids[j] + ")");
      prices_row[j] = v;
    }
    out.dates.push_back(date);
    rows.push_back(std::move(prices_row));
    ++row_idx;
  }
  if (rows.empty()) throw LoadError("no data rows");

  out.prices.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < n; ++j)
      out.prices(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  return out;
}

PriceSeries load_prices_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open price file: " + path);
  return load_prices(in);
}

ScenarioMatrix to_returns(const PriceSeries& p) {
  if (p.rows() < 2) throw LoadError("insufficient history: need at least 2 price rows");
  ScenarioMatrix s;
  s.asset_ids = p.asset_ids;
  const Eigen::Index t_ret = p.rows() - 1;
  s.returns.resize(t_ret, p.assets());
  for (Eigen::Index t = 0; t < t_ret; ++t)
    s.returns.row(t) =
        p.prices.row(t + 1).cwiseQuotient(p.prices.row(t)).array() - 1.0;
  return s;
}

Eigen::VectorXd mean_returns(const ScenarioMatrix& s) {
  return s.returns.colwise().mean();
}

Eigen::MatrixXd covariance(const ScenarioMatrix& s) {
  const Eigen::Index t = s.observations();
  if (t < 2) throw std::invalid_argument("covariance needs at least 2 scenarios");
  Eigen::MatrixXd centered = s.returns.rowwise() - s.returns.colwise().mean();
  Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(t);
  // Kill the asymmetric round-off so downstream solvers see an exactly
  // symmetric matrix.
  return ((cov + cov.transpose()) / 2.0).eval();
}

WindowPlan plan_windows(Eigen::Index total, Eigen::Index in_len, Eigen::Index hold_len) {
  if (in_len < 2) throw std::invalid_argument("plan_windows: in_len must be >= 2");
  if (hold_len < 1) throw std::invalid_argument("plan_windows: hold_len must be >= 1");
  if (total <= in_len)
    throw std::invalid_argument("plan_windows: no out-of-sample period (T <= in_len)");

  WindowPlan plan;
  plan.in_len = in_len;
  plan.hold_len = hold_len;
  for (Eigen::Index out_start = in_len; out_start < total; out_start += hold_len) {
    Window w;
    w.in_start = out_start - in_len;
    w.in_end = out_start;
    w.out_start = out_start;
    w.out_end = std::min(out_start + hold_len, total);
    plan.windows.push_back(w);
  }
  return plan;
}

ScenarioMatrix slice(const ScenarioMatrix& s, Eigen::Index begin, Eigen::Index end) {
  if (begin < 0 || end > s.observations() || begin >= end)
    throw std::invalid_argument("slice: bad range");
  ScenarioMatrix out;
  out.asset_ids = s.asset_ids;
  out.returns = s.returns.middleRows(begin, end - begin);
  return out;
}

ScenarioMatrix drop_column(const ScenarioMatrix& s, Eigen::Index col) {
  if (col < 0 || col >= s.assets()) throw std::invalid_argument("drop_column: bad index");
  ScenarioMatrix out;
  out.returns.resize(s.observations(), s.assets() - 1);
  for (Eigen::Index j = 0, k = 0; j < s.assets(); ++j) {
    if (j == col) continue;
    out.returns.col(k) = s.returns.col(j);
    out.asset_ids.push_back(s.asset_ids[j]);
    ++k;
  }
  return out;
}

std::string returns_to_csv(const ScenarioMatrix& s, const std::vector<std::string>& dates) {
  if (!dates.empty() && static_cast<Eigen::Index>(dates.size()) != s.observations())
    throw std::invalid_argument("returns_to_csv: date count mismatch");
  std::ostringstream out;
  out << "date";
  for (const auto& id : s.asset_ids) out << ',' << io::csv_escape(id);
  out << '\n';
  for (Eigen::Index t = 0; t < s.observations(); ++t) {
    out << (dates.empty() ? std::to_string(t) : dates[static_cast<std::size_t>(t)]);
    for (Eigen::Index j = 0; j < s.assets(); ++j)
      out << ',' << io::format_double(s.returns(t, j));
    out << '\n';
  }
  return out.str();
}

std::string matrix_to_csv(const Eigen::MatrixXd& m, const std::vector<std::string>& labels) {
  std::ostringstream out;
  out << "id";
  for (const auto& id : labels) out << ',' << io::csv_escape(id);
  out << '\n';
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << io::csv_escape(labels[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << ',' << io::format_double(m(i, j));
    out << '\n';
  }
  return out.str();
}

}  // namespace maxdiv::scenarios
