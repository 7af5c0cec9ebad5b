#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "maxdiv/solver.hpp"

using namespace maxdiv::solver;
using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

// Brute-force LP oracle: enumerate candidate vertices (all ways of making
// n_v constraints active among equalities + inequalities + bounds), keep the
// feasible ones, return the best objective. Exponential, test-only.
struct VertexOracle {
  bool feasible = false;
  double objective = std::numeric_limits<double>::infinity();
};

VertexOracle enumerate_lp(const MathProgram& p) {
  const Index n = p.variables();
  std::vector<VectorXd> rows;
  std::vector<double> rhs;
  for (Index r = 0; r < p.ineq_mat.rows(); ++r) {
    rows.push_back(p.ineq_mat.row(r));
    rhs.push_back(p.ineq_rhs[r]);
  }
  std::vector<bool> is_free(static_cast<std::size_t>(n), false);
  for (Index i : p.free_vars) is_free[static_cast<std::size_t>(i)] = true;
  for (Index j = 0; j < n; ++j) {
    if (is_free[static_cast<std::size_t>(j)]) continue;
    VectorXd e = VectorXd::Zero(n);
    e[j] = 1.0;
    rows.push_back(e);
    rhs.push_back(p.lower_bounds.size() ? p.lower_bounds[j] : 0.0);
  }
  const Index m_eq = p.eq_mat.rows();
  const auto m_in = static_cast<Index>(rows.size());
  const Index need = n - m_eq;
  VertexOracle best;
  if (need < 0) return best;

  std::vector<Index> pick(static_cast<std::size_t>(need));
  std::function<void(Index, Index)> rec = [&](Index start, Index depth) {
    if (depth == need) {
      MatrixXd a(n, n);
      VectorXd b(n);
      for (Index r = 0; r < m_eq; ++r) {
        a.row(r) = p.eq_mat.row(r);
        b[r] = p.eq_rhs[r];
      }
      for (Index k = 0; k < need; ++k) {
        a.row(m_eq + k) = rows[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])];
        b[m_eq + k] = rhs[static_cast<std::size_t>(pick[static_cast<std::size_t>(k)])];
      }
      Eigen::FullPivLU<MatrixXd> lu(a);
      if (!lu.isInvertible()) return;
      VectorXd v = lu.solve(b);
      for (Index r = 0; r < m_eq; ++r)
        if (std::abs(p.eq_mat.row(r).dot(v) - p.eq_rhs[r]) > 1e-7) return;
      for (std::size_t r = 0; r < rows.size(); ++r)
        if (rows[r].dot(v) < rhs[r] - 1e-7) return;
      best.feasible = true;
      best.objective = std::min(best.objective, p.linear.dot(v));
      return;
    }
    for (Index i = start; i < m_in; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace

TEST_CASE("symmetric QP splits evenly") {
  MathProgram p;
  p.linear = VectorXd::Zero(2);
  p.quad = 2.0 * MatrixXd::Identity(2, 2);  // objective v'v
  p.eq_mat = MatrixXd::Ones(1, 2);
  p.eq_rhs = VectorXd::Ones(1);
  auto res = solve(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.v[0] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res.v[1] == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(res.kkt_residual <= 1e-7);
}

TEST_CASE("LP corner") {
  MathProgram p;
  p.linear = (VectorXd(1) << -1.0).finished();
  p.ineq_mat = (MatrixXd(1, 1) << -1.0).finished();  // -v >= -1, i.e. v <= 1
  p.ineq_rhs = (VectorXd(1) << -1.0).finished();
  auto res = solve(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.v[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(res.objective == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("contradictory constraints are reported infeasible") {
  MathProgram p;
  p.linear = VectorXd::Zero(1);
  p.ineq_mat = (MatrixXd(2, 1) << 1.0, -1.0).finished();
  p.ineq_rhs = (VectorXd(2) << 1.0, 0.0).finished();  // v >= 1 and -v >= 0
  auto res = solve(p);
  CHECK(res.status == SolveStatus::Infeasible);
}

TEST_CASE("unbounded objective is flagged") {
  MathProgram p;
  p.linear = (VectorXd(1) << -1.0).finished();  // min -v, v >= 0
  auto res = solve(p);
  CHECK(res.status == SolveStatus::Unbounded);
}

TEST_CASE("validation rejects malformed programs") {
  MathProgram p;
  p.linear = VectorXd::Zero(2);
  p.quad = MatrixXd::Zero(3, 3);
  CHECK_THROWS_AS(solve(p), std::invalid_argument);

  MathProgram q;
  q.linear = VectorXd::Zero(2);
  MatrixXd skew(2, 2);
  skew << 1.0, 0.5, -0.5, 1.0;
  q.quad = skew;
  CHECK_THROWS_AS(solve(q), std::invalid_argument);

  MathProgram r;
  r.linear = VectorXd::Zero(2);
  r.eq_mat = MatrixXd::Ones(1, 2);
  r.eq_rhs = VectorXd::Ones(2);
  CHECK_THROWS_AS(solve(r), std::invalid_argument);
}

TEST_CASE("deterministic: identical inputs give identical outputs") {
  std::mt19937_64 rng(1234);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  MathProgram p;
  const Index n = 6;
  p.linear = VectorXd::NullaryExpr(n, [&](Index) { return u(rng); });
  MatrixXd m = MatrixXd::NullaryExpr(n, n, [&](Index, Index) { return u(rng); });
  p.quad = (m * m.transpose() + 0.1 * MatrixXd::Identity(n, n)).eval();
  p.eq_mat = MatrixXd::Ones(1, n);
  p.eq_rhs = VectorXd::Ones(1);
  auto a = solve(p);
  auto b = solve(p);
  REQUIRE(a.status == SolveStatus::Optimal);
  CHECK(a.v == b.v);  // bit-for-bit
  CHECK(a.objective == b.objective);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("random feasible LPs match the vertex-enumeration oracle") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<Index> un(2, 6);
  int solved = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const Index n = un(rng);
    MathProgram p;
    p.linear = VectorXd::NullaryExpr(n, [&](Index) { return u(rng); });
    // A point in the interior of the box keeps everything feasible.
    VectorXd v0 = VectorXd::NullaryExpr(n, [&](Index) { return 0.5 + 0.4 * u(rng); });
    // Box: 0 <= v <= ub (upper bounds as general rows).
    const Index extra = 2 + static_cast<Index>(rng() % 3);
    MatrixXd gi(n + extra, n);
    VectorXd hi(n + extra);
    for (Index j = 0; j < n; ++j) {
      gi.row(j).setZero();
      gi(j, j) = -1.0;
      hi[j] = -(v0[j] + 0.5 + 0.5 * std::abs(u(rng)));
    }
    for (Index r = 0; r < extra; ++r) {
      VectorXd g = VectorXd::NullaryExpr(n, [&](Index) { return u(rng); });
      gi.row(n + r) = g;
      hi[n + r] = g.dot(v0) - 0.25 * std::abs(u(rng));
    }
    p.ineq_mat = gi;
    p.ineq_rhs = hi;
    if (inst % 3 == 0) {
      p.eq_mat = MatrixXd::Ones(1, n);
      p.eq_rhs = (VectorXd(1) << v0.sum()).finished();
    }

    auto oracle = enumerate_lp(p);
    REQUIRE(oracle.feasible);
    auto res = solve(p);
    REQUIRE_MESSAGE(res.status == SolveStatus::Optimal,
                    "instance " << inst << ": " << res.message);
    CHECK(std::abs(res.objective - oracle.objective) <=
          1e-6 * (1.0 + std::abs(oracle.objective)));
    ++solved;
  }
  CHECK(solved == 200);
}

TEST_CASE("equality-constrained PSD QPs match the closed-form KKT solve") {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int inst = 0; inst < 50; ++inst) {
    const Index n = 3 + static_cast<Index>(rng() % 6);
    const Index m = 1 + static_cast<Index>(rng() % (n - 1));
    MatrixXd root = MatrixXd::NullaryExpr(n, n, [&](Index, Index) { return u(rng); });
    MatrixXd q = root * root.transpose() + 0.05 * MatrixXd::Identity(n, n);
    q = ((q + q.transpose()) / 2.0).eval();
    MathProgram p;
    p.quad = q;
    p.linear = VectorXd::NullaryExpr(n, [&](Index) { return u(rng); });
    p.eq_mat = MatrixXd::NullaryExpr(m, n, [&](Index, Index) { return u(rng); });
    p.eq_rhs = VectorXd::NullaryExpr(m, [&](Index) { return u(rng); });
    for (Index j = 0; j < n; ++j) p.free_vars.push_back(j);

    MatrixXd kkt(n + m, n + m);
    kkt.setZero();
    kkt.topLeftCorner(n, n) = q;
    kkt.topRightCorner(n, m) = p.eq_mat.transpose();
    kkt.bottomLeftCorner(m, n) = p.eq_mat;
    VectorXd rhs(n + m);
    rhs.head(n) = -p.linear;
    rhs.tail(m) = p.eq_rhs;
    VectorXd direct = kkt.fullPivLu().solve(rhs).head(n);

    auto res = solve(p);
    REQUIRE(res.status == SolveStatus::Optimal);
    CHECK((res.v - direct).cwiseAbs().maxCoeff() <= 1e-8);
  }
}

TEST_CASE("mixed QP with bounds and inequalities reaches the analytic optimum") {
  // min (v1-1)^2 + (v2-2)^2 s.t. v1 + v2 <= 2, v >= 0  =>  v = (0.5, 1.5).
  MathProgram p;
  p.quad = 2.0 * MatrixXd::Identity(2, 2);
  p.linear = (VectorXd(2) << -2.0, -4.0).finished();
  p.ineq_mat = (MatrixXd(1, 2) << -1.0, -1.0).finished();
  p.ineq_rhs = (VectorXd(1) << -2.0).finished();
  auto res = solve(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.v[0] == doctest::Approx(0.5).epsilon(1e-8));
  CHECK(res.v[1] == doctest::Approx(1.5).epsilon(1e-8));
}

TEST_CASE("free variables may go negative") {
  // min v1 + v2 s.t. v1 + v2 >= -3 with v2 free: optimum at the row.
  MathProgram p;
  p.linear = VectorXd::Ones(2);
  p.ineq_mat = MatrixXd::Ones(1, 2);
  p.ineq_rhs = (VectorXd(1) << -3.0).finished();
  p.free_vars = {1};
  auto res = solve(p);
  REQUIRE(res.status == SolveStatus::Optimal);
  CHECK(res.objective == doctest::Approx(-3.0).epsilon(1e-8));
  CHECK(res.v[1] <= 0.0);
}

TEST_CASE("debug dump names every block") {
  MathProgram p;
  p.linear = (VectorXd(2) << 1.0, -1.0).finished();
  p.eq_mat = MatrixXd::Ones(1, 2);
  p.eq_rhs = VectorXd::Ones(1);
  p.ineq_mat = (MatrixXd(1, 2) << 0.5, 0.0).finished();
  p.ineq_rhs = VectorXd::Zero(1);
  p.free_vars = {1};
  auto text = to_debug_string(p);
  CHECK(text.find("minimize") != std::string::npos);
  CHECK(text.find("eq :") != std::string::npos);
  CHECK(text.find("ineq:") != std::string::npos);
  CHECK(text.find("free: 1") != std::string::npos);
}
