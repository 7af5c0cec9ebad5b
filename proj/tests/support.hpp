#pragma once

// Shared fixtures for the test suites: deterministic random instances and
// scenario builders with exactly prescribed sample moments, so closed-form
// expectations hold without estimation noise.

#include <Eigen/Dense>
#include <random>

#include "maxdiv/scenarios.hpp"

namespace testsup {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using maxdiv::scenarios::ScenarioMatrix;

inline ScenarioMatrix make_scenarios(const MatrixXd& returns) {
  ScenarioMatrix s;
  s.returns = returns;
  for (Index j = 0; j < returns.cols(); ++j) s.asset_ids.push_back("A" + std::to_string(j));
  return s;
}

inline MatrixXd gaussian_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) m(i, j) = normal(rng);
  return m;
}

// Scenario set whose 1/T sample covariance equals `cov` exactly and whose
// sample mean equals `mu` exactly (up to round-off): whiten a random draw by
// its own sample moments, then color with the Cholesky factor of the target.
// Requires T > n and a positive definite target.
inline ScenarioMatrix scenarios_with_moments(const VectorXd& mu, const MatrixXd& cov,
                                             Index T, std::uint64_t seed) {
  const Index n = mu.size();
  std::mt19937_64 rng(seed);
  MatrixXd x = gaussian_matrix(T, n, rng);
  x.rowwise() -= x.colwise().mean();
  MatrixXd sample_cov = x.transpose() * x / static_cast<double>(T);
  Eigen::LLT<MatrixXd> llt_sample(sample_cov);
  const MatrixXd l_sample = llt_sample.matrixL();
  MatrixXd white = l_sample.transpose()
                       .triangularView<Eigen::Upper>()
                       .solve<Eigen::OnTheRight>(x);
  Eigen::LLT<MatrixXd> llt_target(cov);
  MatrixXd colored = white * MatrixXd(llt_target.matrixL()).transpose();
  colored.rowwise() += mu.transpose();
  return make_scenarios(colored);
}

inline MatrixXd equicorrelated_cov(const VectorXd& sigma, double c) {
  const Index n = sigma.size();
  MatrixXd cov(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cov(i, j) = (i == j ? 1.0 : c) * sigma[i] * sigma[j];
  return cov;
}

// Comonotone construction r_{i,t} = a_i + b_i f_t with b_i > 0: every risk
// measure in the library is additive across these assets.
inline ScenarioMatrix comonotone_scenarios(const VectorXd& a, const VectorXd& b,
                                           const VectorXd& factor) {
  MatrixXd r(factor.size(), a.size());
  for (Index i = 0; i < a.size(); ++i) r.col(i) = (b[i] * factor.array() + a[i]).matrix();
  return make_scenarios(r);
}

inline VectorXd random_simplex(Index n, std::mt19937_64& rng) {
  std::exponential_distribution<double> expo(1.0);
  VectorXd w(n);
  for (Index i = 0; i < n; ++i) w[i] = expo(rng);
  return w / w.sum();
}

inline ScenarioMatrix random_scenarios(Index T, Index n, std::mt19937_64& rng,
                                       double mean_scale = 0.002, double vol_scale = 0.02) {
  std::uniform_real_distribution<double> umean(-mean_scale, mean_scale);
  std::uniform_real_distribution<double> uvol(0.3 * vol_scale, 2.0 * vol_scale);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd r(T, n);
  for (Index j = 0; j < n; ++j) {
    const double m = umean(rng), v = uvol(rng);
    for (Index t = 0; t < T; ++t) r(t, j) = m + v * normal(rng);
  }
  return make_scenarios(r);
}

}  // namespace testsup
