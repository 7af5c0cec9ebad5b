#include "maxdiv/solver.hpp"

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <sstream>

#include "maxdiv/io.hpp"

namespace maxdiv::solver {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::Infeasible: return "infeasible";
    case SolveStatus::Unbounded: return "unbounded";
    case SolveStatus::NumericalFailure: return "numerical_failure";
  }
  return "?";
}

void MathProgram::validate() const {
  const Eigen::Index n = variables();
  if (n < 1) throw std::invalid_argument("MathProgram: no variables");
  if (quad) {
    if (quad->rows() != n || quad->cols() != n)
      throw std::invalid_argument("MathProgram: quad dimension mismatch");
    if ((*quad - quad->transpose()).cwiseAbs().maxCoeff() > 1e-12)
      throw std::invalid_argument("MathProgram: quad not symmetric");
  }
  if (eq_mat.rows() != eq_rhs.size() || (eq_mat.rows() > 0 && eq_mat.cols() != n))
    throw std::invalid_argument("MathProgram: equality block dimension mismatch");
  if (ineq_mat.rows() != ineq_rhs.size() || (ineq_mat.rows() > 0 && ineq_mat.cols() != n))
    throw std::invalid_argument("MathProgram: inequality block dimension mismatch");
  if (lower_bounds.size() != 0 && lower_bounds.size() != n)
    throw std::invalid_argument("MathProgram: lower_bounds dimension mismatch");
  for (Eigen::Index i : free_vars)
    if (i < 0 || i >= n) throw std::invalid_argument("MathProgram: free var index out of range");
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

constexpr int kMaxIterations = 200;
constexpr double kGapTol = 1e-9;     // accepted duality gap (per constraint)
constexpr double kGapTarget = 3e-12; // keep polishing down to here
constexpr double kFeasTol = 1e-9;    // residual tolerance (scaled)
constexpr double kStaticReg = 1e-11; // quasidefinite regularization

// Internal standard form:
//   min 1/2 v'Qv + c'v   s.t.  A v = b,  G v >= h
// where G stacks the user's inequality rows and one bound row per
// non-free variable.
struct Standardized {
  Eigen::Index nv = 0, me = 0, mi = 0;
  SpMat Q, A, G;
  Eigen::VectorXd c, b, h;
  bool has_quad = false;
};

SpMat dense_to_sparse(const Eigen::MatrixXd& m) {
  std::vector<Triplet> trips;
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i)
      if (m(i, j) != 0.0) trips.emplace_back(i, j, m(i, j));
  SpMat out(m.rows(), m.cols());
  out.setFromTriplets(trips.begin(), trips.end());
  return out;
}

Standardized standardize(const MathProgram& p) {
  Standardized s;
  s.nv = p.variables();
  s.me = p.eq_mat.rows();
  s.c = p.linear;
  s.b = p.eq_rhs;
  if (s.me > 0) {
    s.A = dense_to_sparse(p.eq_mat);
  } else {
    s.A = SpMat(0, s.nv);  // keep the column count even when empty
  }
  s.has_quad = p.quad.has_value();
  s.Q = s.has_quad ? dense_to_sparse(*p.quad) : SpMat(s.nv, s.nv);

  std::vector<bool> is_free(static_cast<std::size_t>(s.nv), false);
  for (Eigen::Index i : p.free_vars) is_free[static_cast<std::size_t>(i)] = true;

  std::vector<Triplet> trips;
  std::vector<double> rhs;
  for (Eigen::Index r = 0; r < p.ineq_mat.rows(); ++r) {
    for (Eigen::Index j = 0; j < s.nv; ++j)
      if (p.ineq_mat(r, j) != 0.0)
        trips.emplace_back(static_cast<Eigen::Index>(rhs.size()), j, p.ineq_mat(r, j));
    rhs.push_back(p.ineq_rhs[r]);
  }
  for (Eigen::Index j = 0; j < s.nv; ++j) {
    if (is_free[static_cast<std::size_t>(j)]) continue;
    trips.emplace_back(static_cast<Eigen::Index>(rhs.size()), j, 1.0);
    rhs.push_back(p.lower_bounds.size() ? p.lower_bounds[j] : 0.0);
  }
  s.mi = static_cast<Eigen::Index>(rhs.size());
  s.G = SpMat(s.mi, s.nv);
  s.G.setFromTriplets(trips.begin(), trips.end());
  s.h = Eigen::Map<Eigen::VectorXd>(rhs.data(), static_cast<Eigen::Index>(rhs.size()));
  return s;
}

double objective_of(const Standardized& s, const Eigen::VectorXd& v) {
  double obj = s.c.dot(v);
  if (s.has_quad) obj += 0.5 * v.dot(s.Q * v);
  return obj;
}

struct IpmState {
  Eigen::VectorXd v, y, z, s;
  int iterations = 0;
  bool converged = false;
  bool unbounded_hint = false;
  double primal_res = 0.0, dual_res = 0.0, mu = 0.0;
};

struct Residuals {
  double pres = 0.0, dres = 0.0, mu = 0.0, pobj = 0.0;
};

// Ruiz equilibration plus cost scaling, in place. Portfolio programs mix
// coefficient magnitudes badly (daily variances ~1e-4 against unit budget
// rows); without balancing, the interior-point iterates oscillate.
struct Scaling {
  Eigen::VectorXd col;    // v = col .* v_scaled
  Eigen::VectorXd row_a;  // y = row_a .* y_scaled / gamma
  Eigen::VectorXd row_g;  // z = row_g .* z_scaled / gamma, s = s_scaled / row_g
  double gamma = 1.0;
};

void scale_columns(SpMat& m, const Eigen::VectorXd& f) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) it.valueRef() *= f[it.col()];
}

void scale_rows(SpMat& m, const Eigen::VectorXd& f) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it) it.valueRef() *= f[it.row()];
}

void accumulate_col_max(const SpMat& m, Eigen::VectorXd& acc) {
  for (int k = 0; k < m.outerSize(); ++k)
    for (SpMat::InnerIterator it(m, k); it; ++it)
      acc[it.col()] = std::max(acc[it.col()], std::abs(it.value()));
}

Scaling equilibrate(Standardized& st) {
  Scaling sc;
  sc.col = Eigen::VectorXd::Ones(st.nv);
  sc.row_a = Eigen::VectorXd::Ones(st.me);
  sc.row_g = Eigen::VectorXd::Ones(st.mi);

  for (int pass = 0; pass < 10; ++pass) {
    Eigen::VectorXd cmax = Eigen::VectorXd::Zero(st.nv);
    accumulate_col_max(st.Q, cmax);
    accumulate_col_max(st.A, cmax);
    accumulate_col_max(st.G, cmax);
    Eigen::VectorXd dc(st.nv);
    bool balanced = true;
    for (Eigen::Index j = 0; j < st.nv; ++j) {
      dc[j] = (cmax[j] > 0.0) ? 1.0 / std::sqrt(cmax[j]) : 1.0;
      if (cmax[j] > 0.0 && (cmax[j] > 2.0 || cmax[j] < 0.5)) balanced = false;
    }
    scale_columns(st.Q, dc);
    scale_rows(st.Q, dc);
    scale_columns(st.A, dc);
    scale_columns(st.G, dc);
    st.c = st.c.cwiseProduct(dc);
    sc.col = sc.col.cwiseProduct(dc);

    auto scale_block = [&](SpMat& m, Eigen::VectorXd& rhs, Eigen::VectorXd& cum) {
      Eigen::VectorXd rmax = Eigen::VectorXd::Zero(m.rows());
      for (int k = 0; k < m.outerSize(); ++k)
        for (SpMat::InnerIterator it(m, k); it; ++it)
          rmax[it.row()] = std::max(rmax[it.row()], std::abs(it.value()));
      Eigen::VectorXd dr(m.rows());
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        dr[i] = (rmax[i] > 0.0) ? 1.0 / std::sqrt(rmax[i]) : 1.0;
        if (rmax[i] > 0.0 && (rmax[i] > 2.0 || rmax[i] < 0.5)) balanced = false;
      }
      scale_rows(m, dr);
      rhs = rhs.cwiseProduct(dr);
      cum = cum.cwiseProduct(dr);
    };
    scale_block(st.A, st.b, sc.row_a);
    scale_block(st.G, st.h, sc.row_g);
    if (balanced) break;
  }

  double cost_mag = st.c.cwiseAbs().maxCoeff();
  if (st.has_quad) {
    Eigen::VectorXd qmax = Eigen::VectorXd::Zero(st.nv);
    accumulate_col_max(st.Q, qmax);
    cost_mag = std::max(cost_mag, qmax.maxCoeff());
  }
  sc.gamma = (cost_mag > 0.0) ? std::clamp(1.0 / cost_mag, 1e-8, 1e8) : 1.0;
  st.c *= sc.gamma;
  st.Q *= sc.gamma;
  return sc;
}

Residuals residuals_on(const Standardized& st, const Eigen::VectorXd& v,
                       const Eigen::VectorXd& y, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& s) {
  Residuals r;
  const Eigen::VectorXd qv =
      st.has_quad ? (st.Q * v).eval() : Eigen::VectorXd::Zero(st.nv).eval();
  r.dres = (qv + st.c - st.A.transpose() * y - st.G.transpose() * z).cwiseAbs().maxCoeff();
  r.pres = std::max(st.me ? (st.A * v - st.b).cwiseAbs().maxCoeff() : 0.0,
                    st.mi ? (st.G * v - s - st.h).cwiseAbs().maxCoeff() : 0.0);
  r.mu = st.mi ? s.dot(z) / static_cast<double>(st.mi) : 0.0;
  r.pobj = objective_of(st, v);
  return r;
}

// Lower-triangular assembly of the regularized KKT matrix
//   [ Q + G'WG + dI      A' ]
//   [ A              -d I   ]
SpMat assemble_kkt(const Standardized& st, const Eigen::VectorXd& w, double reg) {
  const Eigen::Index n = st.nv, me = st.me;
  SpMat gwg = st.G.transpose() * w.asDiagonal() * st.G;
  std::vector<Triplet> trips;
  trips.reserve(static_cast<std::size_t>(gwg.nonZeros() + st.Q.nonZeros() + st.A.nonZeros() + n + me));
  for (int k = 0; k < gwg.outerSize(); ++k)
    for (SpMat::InnerIterator it(gwg, k); it; ++it)
      if (it.row() >= it.col()) trips.emplace_back(it.row(), it.col(), it.value());
  for (int k = 0; k < st.Q.outerSize(); ++k)
    for (SpMat::InnerIterator it(st.Q, k); it; ++it)
      if (it.row() >= it.col()) trips.emplace_back(it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < n; ++i) trips.emplace_back(i, i, reg);
  for (int k = 0; k < st.A.outerSize(); ++k)
    for (SpMat::InnerIterator it(st.A, k); it; ++it)
      trips.emplace_back(n + it.row(), it.col(), it.value());
  for (Eigen::Index i = 0; i < me; ++i) trips.emplace_back(n + i, n + i, -reg);
  SpMat kkt(n + me, n + me);
  kkt.setFromTriplets(trips.begin(), trips.end());
  return kkt;
}

// One interior-point run on the standardized problem. Requires mi >= 1.
IpmState run_ipm(const Standardized& st) {
  const Eigen::Index n = st.nv, me = st.me, mi = st.mi;
  IpmState it;

  // Starting point: least-squares v aiming at A v = b, G v = h + 1, then
  // slacks clipped away from zero. Crude but serviceable for an
  // infeasible-start method.
  {
    SpMat m = SpMat(st.A.transpose()) * st.A + SpMat(st.G.transpose()) * st.G;
    for (Eigen::Index i = 0; i < n; ++i) m.coeffRef(i, i) += 1e-8;
    Eigen::SimplicialLDLT<SpMat> ldlt(m);
    Eigen::VectorXd rhs = st.A.transpose() * st.b +
                          st.G.transpose() * (st.h + Eigen::VectorXd::Ones(mi));
    it.v = (ldlt.info() == Eigen::Success) ? ldlt.solve(rhs).eval()
                                           : Eigen::VectorXd::Zero(n).eval();
    if (!it.v.allFinite()) it.v.setZero();
  }
  it.y = Eigen::VectorXd::Zero(me);
  it.s = (st.G * it.v - st.h).cwiseMax(1.0);
  it.z = Eigen::VectorXd::Ones(mi);

  const double scale_primal = 1.0 + std::max(st.b.size() ? st.b.cwiseAbs().maxCoeff() : 0.0,
                                             st.h.size() ? st.h.cwiseAbs().maxCoeff() : 0.0);
  const double scale_dual = 1.0 + st.c.cwiseAbs().maxCoeff();

  auto residuals_at = [&](const IpmState& state) {
    Residuals r;
    const Eigen::VectorXd qv = st.has_quad ? (st.Q * state.v).eval()
                                           : Eigen::VectorXd::Zero(n).eval();
    r.dres = (qv + st.c - st.A.transpose() * state.y - st.G.transpose() * state.z)
                 .cwiseAbs()
                 .maxCoeff();
    r.pres = std::max(me ? (st.A * state.v - st.b).cwiseAbs().maxCoeff() : 0.0,
                      (st.G * state.v - state.s - st.h).cwiseAbs().maxCoeff());
    r.mu = state.s.dot(state.z) / static_cast<double>(mi);
    r.pobj = objective_of(st, state.v);
    return r;
  };
  auto score_of = [&](const Residuals& r) {
    return std::max({r.pres / scale_primal, r.dres / scale_dual,
                     r.mu / (1.0 + std::abs(r.pobj))});
  };
  auto is_converged = [&](const Residuals& r) {
    return r.pres <= kFeasTol * scale_primal && r.dres <= 1e-8 * scale_dual &&
           r.mu <= kGapTol * (1.0 + std::abs(r.pobj));
  };

  IpmState best = it;
  double best_score = std::numeric_limits<double>::infinity();
  int stall = 0;

  auto finish = [&](IpmState current) {
    const Residuals rc = residuals_at(current);
    if (score_of(rc) > best_score) current = best;
    const Residuals r = residuals_at(current);
    current.primal_res = r.pres;
    current.dual_res = r.dres;
    current.mu = r.mu;
    current.converged = is_converged(r);
    current.iterations = it.iterations;
    return current;
  };

  for (int iter = 0; iter < kMaxIterations; ++iter) {
    it.iterations = iter;
    const Eigen::VectorXd qv = st.has_quad ? (st.Q * it.v).eval()
                                           : Eigen::VectorXd::Zero(n).eval();
    Eigen::VectorXd r_dual = qv + st.c - st.A.transpose() * it.y - st.G.transpose() * it.z;
    Eigen::VectorXd r_eq = st.A * it.v - st.b;
    Eigen::VectorXd r_in = st.G * it.v - it.s - st.h;
    const double mu = it.s.dot(it.z) / static_cast<double>(mi);
    const double pres = std::max(me ? r_eq.cwiseAbs().maxCoeff() : 0.0,
                                 r_in.cwiseAbs().maxCoeff());
    const double dres = r_dual.cwiseAbs().maxCoeff();
    const double pobj = objective_of(st, it.v);

    it.primal_res = pres;
    it.dual_res = dres;
    it.mu = mu;

    if (std::getenv("MAXDIV_IPM_TRACE"))
      std::fprintf(stderr, "ipm %3d pres %.3e dres %.3e mu %.3e obj %.6e\n", iter, pres,
                   dres, mu, pobj);

    const Residuals now{pres, dres, mu, pobj};
    if (score_of(now) < best_score) {
      best_score = score_of(now);
      best = it;
      stall = 0;
    } else if (++stall > 15) {
      return finish(it);
    }
    if (pres <= 1e-7 * scale_primal &&
        (pobj < -1e13 || it.v.cwiseAbs().maxCoeff() > 1e13)) {
      it.unbounded_hint = true;
      return it;
    }
    // The acceptance wall is kGapTol; iterating further sharpens the
    // active-set split and the objective, until the scaling matrix becomes
    // too ill-conditioned to help.
    if (is_converged(now) && mu <= kGapTarget * (1.0 + std::abs(pobj))) {
      it.converged = true;
      it.primal_res = pres;
      it.dual_res = dres;
      it.mu = mu;
      return it;
    }
    if (mu <= 0.3 * kGapTarget * (1.0 + std::abs(pobj))) return finish(it);

    // Scaling matrix W = Z / S, guarded against extreme ratios.
    Eigen::VectorXd w(mi);
    for (Eigen::Index i = 0; i < mi; ++i)
      w[i] = std::clamp(it.z[i] / it.s[i], 1e-14, 1e14);

    double reg = kStaticReg * std::max(1.0, scale_primal);
    Eigen::SimplicialLDLT<SpMat> ldlt;
    for (int attempt = 0; attempt < 4; ++attempt) {
      ldlt.compute(assemble_kkt(st, w, reg));
      if (ldlt.info() == Eigen::Success) break;
      reg *= 100.0;
    }
    if (ldlt.info() != Eigen::Success) return it;
    const SpMat kkt_exact = assemble_kkt(st, w, 0.0);

    auto solve_direction = [&](const Eigen::VectorXd& r_comp, Eigen::VectorXd& dv,
                               Eigen::VectorXd& dy, Eigen::VectorXd& dz,
                               Eigen::VectorXd& ds) {
      // Eliminate ds and dz, solve the augmented system, back-substitute.
      Eigen::VectorXd rhs(n + me);
      rhs.head(n) = -r_dual - st.G.transpose() *
                                  (w.cwiseProduct(r_in) + r_comp.cwiseQuotient(it.s));
      rhs.tail(me) = -r_eq;
      Eigen::VectorXd sol = ldlt.solve(rhs);
      // Iterative refinement keeps the large-W iterations honest.
      for (int refine = 0; refine < 3; ++refine) {
        Eigen::VectorXd resid =
            rhs - kkt_exact.selfadjointView<Eigen::Lower>() * sol;
        if (resid.cwiseAbs().maxCoeff() <= 1e-14 * (1.0 + rhs.cwiseAbs().maxCoeff()))
          break;
        sol += ldlt.solve(resid);
      }
      dv = sol.head(n);
      dy = -sol.tail(me);
      dz = -w.cwiseProduct(r_in + st.G * dv) - r_comp.cwiseQuotient(it.s);
      ds = -(r_comp + it.s.cwiseProduct(dz)).cwiseQuotient(it.z);
    };

    auto max_step = [](const Eigen::VectorXd& x, const Eigen::VectorXd& dx) {
      double a = 1.0;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (dx[i] < 0.0) a = std::min(a, -x[i] / dx[i]);
      return a;
    };

    // Predictor.
    Eigen::VectorXd dv_a, dy_a, dz_a, ds_a;
    solve_direction(it.s.cwiseProduct(it.z), dv_a, dy_a, dz_a, ds_a);
    const double ap_a = max_step(it.s, ds_a);
    const double ad_a = max_step(it.z, dz_a);
    const double mu_aff = (it.s + ap_a * ds_a).dot(it.z + ad_a * dz_a) /
                          static_cast<double>(mi);
    double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);
    sigma = std::clamp(sigma, 1e-8, 1.0);

    // Corrector.
    Eigen::VectorXd r_comp = it.s.cwiseProduct(it.z) + ds_a.cwiseProduct(dz_a) -
                             Eigen::VectorXd::Constant(mi, sigma * mu);
    Eigen::VectorXd dv, dy, dz, ds;
    solve_direction(r_comp, dv, dy, dz, ds);

    const double tau = std::max(0.99, 1.0 - 0.1 * mu);
    double ap = std::min(1.0, tau * max_step(it.s, ds));
    double ad = std::min(1.0, tau * max_step(it.z, dz));
    if (std::getenv("MAXDIV_IPM_TRACE"))
      std::fprintf(stderr, "    sigma %.2e mu_aff %.2e ap %.3f ad %.3f |dz| %.2e |ds| %.2e\n",
                   sigma, mu_aff, ap, ad, dz.cwiseAbs().maxCoeff(),
                   ds.cwiseAbs().maxCoeff());
    if (ap < 1e-12 && ad < 1e-12) return finish(it);  // stuck

    // An exact Newton direction contracts the primal residual by (1 - ap);
    // late-stage ill-conditioning can produce directions that do the
    // opposite. Backtrack rather than let one bad step wreck the iterate.
    bool applied = false;
    for (int backtrack = 0; backtrack < 20 && !applied; ++backtrack) {
      IpmState cand = it;
      cand.v += ap * dv;
      cand.s += ap * ds;
      cand.y += ad * dy;
      cand.z += ad * dz;
      cand.s = cand.s.cwiseMax(1e-300);
      cand.z = cand.z.cwiseMax(1e-300);
      const Residuals rc = residuals_at(cand);
      const bool acceptable =
          rc.pres <= std::max(2.0 * pres, 10.0 * kFeasTol * scale_primal) &&
          rc.dres <= std::max(10.0 * dres, 1e-7 * scale_dual);
      if (acceptable) {
        it.v = std::move(cand.v);
        it.s = std::move(cand.s);
        it.y = std::move(cand.y);
        it.z = std::move(cand.z);
        applied = true;
      } else {
        ap *= 0.5;
        ad *= 0.5;
      }
    }
    if (!applied) return finish(it);
  }
  it.iterations = kMaxIterations;
  return finish(it);
}

// Active-set polish: snap the interior-point iterate onto the optimal face
// by solving the equality-form KKT system for a guessed active set, then
// repairing the guess primal-dual style: rows with negative multipliers are
// dropped, violated inactive rows are added, and the system is re-solved.
// The result is adopted only after a full KKT verification; on any doubt the
// interior-point answer stands.
bool try_polish(const Standardized& st, IpmState& state,
                std::vector<Eigen::Index> active) {
  const bool trace = std::getenv("MAXDIV_IPM_TRACE") != nullptr;
  auto bail = [&](const char* why) {
    if (trace) std::fprintf(stderr, "polish bail: %s\n", why);
    return false;
  };
  const Eigen::Index n = st.nv, me = st.me, mi = st.mi;
  const double cost_scale = 1.0 + st.c.cwiseAbs().maxCoeff();
  const double rhs_scale = 1.0 + std::max(st.b.size() ? st.b.cwiseAbs().maxCoeff() : 0.0,
                                          st.h.size() ? st.h.cwiseAbs().maxCoeff() : 0.0);
  const double ztol = 1e-9 * cost_scale;
  const SpMat gt = st.G.transpose();

  Eigen::VectorXd v, y, z;
  bool clean = false;
  for (int round = 0; round < 12 && !clean; ++round) {
    const auto ma = static_cast<Eigen::Index>(active.size());
    const Eigen::Index dim = n + me + ma;
    std::vector<Triplet> trips;
    for (int k = 0; k < st.Q.outerSize(); ++k)
      for (SpMat::InnerIterator qit(st.Q, k); qit; ++qit)
        trips.emplace_back(qit.row(), qit.col(), qit.value());
    for (int k = 0; k < st.A.outerSize(); ++k)
      for (SpMat::InnerIterator ait(st.A, k); ait; ++ait) {
        trips.emplace_back(n + ait.row(), ait.col(), ait.value());
        trips.emplace_back(ait.col(), n + ait.row(), ait.value());
      }
    for (Eigen::Index a = 0; a < ma; ++a) {
      for (SpMat::InnerIterator git(gt, active[static_cast<std::size_t>(a)]); git; ++git) {
        trips.emplace_back(n + me + a, git.row(), git.value());
        trips.emplace_back(git.row(), n + me + a, git.value());
      }
    }
    SpMat kkt(dim, dim);
    kkt.setFromTriplets(trips.begin(), trips.end());

    Eigen::VectorXd rhs(dim);
    rhs.head(n) = -st.c;
    rhs.segment(n, me) = st.b;
    for (Eigen::Index a = 0; a < ma; ++a)
      rhs[n + me + a] = st.h[active[static_cast<std::size_t>(a)]];

    Eigen::SparseLU<SpMat> lu;
    lu.analyzePattern(kkt);
    lu.factorize(kkt);
    Eigen::VectorXd sol;
    bool exact = (lu.info() == Eigen::Success);
    if (exact) {
      sol = lu.solve(rhs);
      exact = sol.allFinite();
    }
    if (!exact) {
      // Singular system: a redundant or plainly wrong active set. Solve a
      // regularized version and refine; even a residual-stuck answer still
      // carries usable multiplier signs for the repair step.
      SpMat reg = kkt;
      for (Eigen::Index i = 0; i < dim; ++i)
        reg.coeffRef(i, i) += (i < n) ? 1e-10 : -1e-10;
      lu.analyzePattern(reg);
      lu.factorize(reg);
      if (lu.info() != Eigen::Success) return bail("regularized factorization failed");
      sol = lu.solve(rhs);
      if (!sol.allFinite()) return bail("non-finite regularized solve");
      const double scale_r = 1.0 + rhs.cwiseAbs().maxCoeff();
      double prev_resid = std::numeric_limits<double>::infinity();
      for (int refine = 0; refine < 40; ++refine) {
        Eigen::VectorXd resid = rhs - kkt * sol;
        const double rnorm = resid.cwiseAbs().maxCoeff();
        if (rnorm <= 1e-13 * scale_r) {
          exact = true;
          break;
        }
        if (rnorm >= 0.9 * prev_resid) break;  // inconsistent: stopped improving
        prev_resid = rnorm;
        Eigen::VectorXd update = lu.solve(resid);
        if (!update.allFinite()) return bail("non-finite refinement update");
        sol += update;
      }
      exact = exact || (rhs - kkt * sol).cwiseAbs().maxCoeff() <= 1e-10 * scale_r;
    }

    v = sol.head(n);
    y = -sol.segment(n, me);
    z = Eigen::VectorXd::Zero(mi);
    for (Eigen::Index a = 0; a < ma; ++a)
      z[active[static_cast<std::size_t>(a)]] = -sol[n + me + a];

    // Drop clearly wrong rows first; be conservative with inexact solves.
    const double drop_tol = exact ? ztol : 1e-5 * cost_scale;
    std::vector<Eigen::Index> kept;
    for (Eigen::Index i : active)
      if (z[i] >= -drop_tol) kept.push_back(i);
    if (kept.size() != active.size()) {
      active = std::move(kept);
      continue;
    }
    if (!exact) return bail("singular system with no droppable row");

    // Add any violated rows; they were tight at the optimum after all.
    Eigen::VectorXd slack = st.G * v - st.h;
    std::vector<char> in_active(static_cast<std::size_t>(mi), 0);
    for (Eigen::Index i : active) in_active[static_cast<std::size_t>(i)] = 1;
    bool added = false;
    for (Eigen::Index i = 0; i < mi; ++i) {
      if (in_active[static_cast<std::size_t>(i)]) continue;
      if (slack[i] < -1e-11 * rhs_scale) {
        active.push_back(i);
        added = true;
      }
    }
    if (!added) clean = true;
  }
  if (!clean) return bail("active-set repair did not settle");
  z = z.cwiseMax(0.0);

  Eigen::VectorXd slack = st.G * v - st.h;
  if (slack.minCoeff() < -1e-9 * rhs_scale) {
    if (trace) std::fprintf(stderr, "polish reject: slack %.3e\n", slack.minCoeff());
    return false;
  }
  if (me > 0 && (st.A * v - st.b).cwiseAbs().maxCoeff() > 1e-9 * rhs_scale) {
    if (trace) std::fprintf(stderr, "polish reject: eq residual\n");
    return false;
  }
  const Eigen::VectorXd qv = st.has_quad ? (st.Q * v).eval() : Eigen::VectorXd::Zero(n).eval();
  Eigen::VectorXd r_dual = qv + st.c - st.A.transpose() * y - st.G.transpose() * z;
  if (r_dual.cwiseAbs().maxCoeff() > 1e-8 * cost_scale) {
    if (trace)
      std::fprintf(stderr, "polish reject: dual residual %.3e\n",
                   r_dual.cwiseAbs().maxCoeff());
    return false;
  }
  // Never trade away objective quality for a cleaner basis.
  if (objective_of(st, v) >
      objective_of(st, state.v) + 1e-7 * (1.0 + std::abs(objective_of(st, state.v)))) {
    if (trace) std::fprintf(stderr, "polish reject: objective regression\n");
    return false;
  }
  if (trace)
    std::fprintf(stderr, "polish accepted (%d active)\n",
                 static_cast<int>((z.array() > 0.0).count()));

  state.v = v;
  state.y = y;
  state.z = z;
  state.s = slack.cwiseMax(0.0);
  state.primal_res = std::max((me > 0) ? (st.A * v - st.b).cwiseAbs().maxCoeff() : 0.0,
                              std::max(0.0, -slack.minCoeff()));
  state.dual_res = r_dual.cwiseAbs().maxCoeff();
  double comp = 0.0;
  for (Eigen::Index i = 0; i < mi; ++i) comp = std::max(comp, state.s[i] * z[i]);
  state.mu = comp;
  return true;
}

// Equality-only problem: one KKT solve, no interior point needed.
SolveResult solve_equality_only(const Standardized& st) {
  const Eigen::Index n = st.nv, me = st.me;
  SolveResult res;
  std::vector<Triplet> trips;
  for (int k = 0; k < st.Q.outerSize(); ++k)
    for (SpMat::InnerIterator qit(st.Q, k); qit; ++qit)
      trips.emplace_back(qit.row(), qit.col(), qit.value());
  for (int k = 0; k < st.A.outerSize(); ++k)
    for (SpMat::InnerIterator ait(st.A, k); ait; ++ait) {
      trips.emplace_back(n + ait.row(), ait.col(), ait.value());
      trips.emplace_back(ait.col(), n + ait.row(), ait.value());
    }
  SpMat kkt(n + me, n + me);
  kkt.setFromTriplets(trips.begin(), trips.end());
  Eigen::SparseLU<SpMat> lu;
  lu.analyzePattern(kkt);
  lu.factorize(kkt);
  if (lu.info() != Eigen::Success) {
    res.status = SolveStatus::NumericalFailure;
    res.message = "singular KKT system (equality-constrained problem)";
    return res;
  }
  Eigen::VectorXd rhs(n + me);
  rhs.head(n) = -st.c;
  rhs.tail(me) = st.b;
  Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) {
    res.status = SolveStatus::NumericalFailure;
    res.message = "non-finite KKT solution";
    return res;
  }
  res.v = sol.head(n);
  res.objective = objective_of(st, res.v);
  const double pres = me ? (st.A * res.v - st.b).cwiseAbs().maxCoeff() : 0.0;
  Eigen::VectorXd y = -sol.tail(me);
  const Eigen::VectorXd qv = st.has_quad ? (st.Q * res.v).eval()
                                         : Eigen::VectorXd::Zero(n).eval();
  const double dres = (qv + st.c - st.A.transpose() * y).cwiseAbs().maxCoeff();
  res.kkt_residual = std::max(pres, dres);
  res.iterations = 1;
  res.status = (res.kkt_residual <= 1e-7) ? SolveStatus::Optimal : SolveStatus::NumericalFailure;
  if (res.status != SolveStatus::Optimal) res.message = "KKT residual too large";
  return res;
}

// Elastic phase-1: min sum(p)+sum(q)+sum(u)
//   s.t. A v + p - q = b,  G v + u >= h,  p,q,u >= 0, v free.
// Always feasible and bounded below by zero; a strictly positive optimum
// certifies infeasibility of the original constraints.
double elastic_infeasibility(const Standardized& st) {
  Standardized el;
  el.nv = st.nv + 2 * st.me + st.mi;
  el.me = st.me;
  el.mi = st.mi + 2 * st.me + st.mi;  // original rows (with u) + elastic bounds
  el.has_quad = false;
  el.Q = SpMat(el.nv, el.nv);
  el.c = Eigen::VectorXd::Zero(el.nv);
  el.c.tail(2 * st.me + st.mi).setOnes();

  std::vector<Triplet> atr;
  for (int k = 0; k < st.A.outerSize(); ++k)
    for (SpMat::InnerIterator ait(st.A, k); ait; ++ait)
      atr.emplace_back(ait.row(), ait.col(), ait.value());
  for (Eigen::Index r = 0; r < st.me; ++r) {
    atr.emplace_back(r, st.nv + r, 1.0);
    atr.emplace_back(r, st.nv + st.me + r, -1.0);
  }
  el.A = SpMat(st.me, el.nv);
  el.A.setFromTriplets(atr.begin(), atr.end());
  el.b = st.b;

  std::vector<Triplet> gtr;
  for (int k = 0; k < st.G.outerSize(); ++k)
    for (SpMat::InnerIterator git(st.G, k); git; ++git)
      gtr.emplace_back(git.row(), git.col(), git.value());
  for (Eigen::Index r = 0; r < st.mi; ++r)
    gtr.emplace_back(r, st.nv + 2 * st.me + r, 1.0);
  for (Eigen::Index j = 0; j < 2 * st.me + st.mi; ++j)
    gtr.emplace_back(st.mi + j, st.nv + j, 1.0);
  el.G = SpMat(el.mi, el.nv);
  el.G.setFromTriplets(gtr.begin(), gtr.end());
  el.h = Eigen::VectorXd::Zero(el.mi);
  el.h.head(st.mi) = st.h;

  IpmState state = run_ipm(el);
  if (!state.converged) return -1.0;  // could not certify either way
  return objective_of(el, state.v);
}

}  // namespace

SolveResult solve(const MathProgram& p) {
  p.validate();
  const Standardized original = standardize(p);

  if (original.mi == 0) return solve_equality_only(original);

  Standardized scaled = original;
  const Scaling sc = equilibrate(scaled);
  IpmState state = run_ipm(scaled);

  SolveResult res;
  res.iterations = state.iterations;

  if (!state.unbounded_hint) {
    // The complementarity split is sharpest in scaled units; the polish and
    // all reported numbers use the original data. A verified KKT point of a
    // convex program is optimal even when the interior-point loop stalled
    // short of its gap target, so the crossover is attempted either way.
    // Rows whose Tapia indicator z/s sits near one (weakly active rows at a
    // degenerate optimum) are genuinely ambiguous; both memberships are
    // tried for the few most ambiguous ones.
    std::vector<Eigen::Index> surely_active;
    std::vector<std::pair<double, Eigen::Index>> ambiguous;  // |log ratio|, row
    for (Eigen::Index i = 0; i < original.mi; ++i) {
      const double ratio = state.z[i] / std::max(state.s[i], 1e-300);
      if (ratio >= 1e4) {
        surely_active.push_back(i);
      } else if (ratio > 1e-4) {
        ambiguous.emplace_back(std::abs(std::log10(ratio)), i);
      }
    }
    // Enumerate only the few most balanced pairs; classify the rest by the
    // plain complementarity split.
    std::sort(ambiguous.begin(), ambiguous.end());
    while (ambiguous.size() > 3) {
      const Eigen::Index i = ambiguous.back().second;
      if (state.z[i] > state.s[i]) surely_active.push_back(i);
      ambiguous.pop_back();
    }

    state.v = sc.col.cwiseProduct(state.v);
    state.y = sc.row_a.cwiseProduct(state.y) / sc.gamma;
    state.z = sc.row_g.cwiseProduct(state.z) / sc.gamma;
    state.s = state.s.cwiseQuotient(sc.row_g);

    bool polished = false;
    const auto n_amb = static_cast<unsigned>(ambiguous.size());
    for (unsigned mask = 0; mask < (1u << n_amb) && !polished; ++mask) {
      std::vector<Eigen::Index> guess = surely_active;
      for (unsigned b = 0; b < n_amb; ++b)
        if (mask & (1u << b)) guess.push_back(ambiguous[b].second);
      polished = try_polish(original, state, std::move(guess));
    }

    const Residuals r = residuals_on(original, state.v, state.y, state.z, state.s);
    double comp = 0.0;
    for (Eigen::Index i = 0; i < original.mi; ++i)
      comp = std::max(comp, std::abs(state.s[i] * state.z[i]));
    const double kkt = std::max({r.pres, r.dres, comp});
    const bool meets_bounds = r.pres <= 1e-8 && kkt <= 1e-7;
    if ((state.converged || polished) && meets_bounds) {
      res.status = SolveStatus::Optimal;
      res.v = state.v;
      res.objective = r.pobj;
      res.kkt_residual = kkt;
      return res;
    }
    if (state.converged) {
      res.status = SolveStatus::NumericalFailure;
      res.v = state.v;
      res.objective = r.pobj;
      res.kkt_residual = kkt;
      std::ostringstream msg;
      msg << "converged only to primal " << r.pres << ", kkt " << kkt;
      res.message = msg.str();
      return res;
    }
    // Undo the unscaling so the certification below sees consistent data.
    state.v = state.v.cwiseQuotient(sc.col);
  } else {
    res.status = SolveStatus::Unbounded;
    res.message = "objective diverges along a feasible direction";
    return res;
  }

  const double scale = 1.0 + std::max(scaled.b.size() ? scaled.b.cwiseAbs().maxCoeff() : 0.0,
                                      scaled.h.size() ? scaled.h.cwiseAbs().maxCoeff() : 0.0);
  const double infeas = elastic_infeasibility(scaled);
  if (infeas > 1e-7 * scale) {
    res.status = SolveStatus::Infeasible;
    std::ostringstream msg;
    msg << "constraints inconsistent (elastic violation " << infeas << ")";
    res.message = msg.str();
    return res;
  }
  res.status = SolveStatus::NumericalFailure;
  std::ostringstream msg;
  msg << "no convergence in " << state.iterations << " iterations (primal "
      << state.primal_res << ", dual " << state.dual_res << ", mu " << state.mu << ")";
  res.message = msg.str();
  res.v = sc.col.cwiseProduct(state.v);
  res.objective = objective_of(original, res.v);
  res.kkt_residual = std::max({state.primal_res, state.dual_res, state.mu});
  return res;
}

std::string to_debug_string(const MathProgram& p) {
  std::ostringstream out;
  const Eigen::Index n = p.variables();
  out << "minimize";
  if (p.quad) out << " 1/2 v'Qv +";
  out << " c'v, n = " << n << "\n";
  out << "c =";
  for (Eigen::Index j = 0; j < n; ++j) out << ' ' << io::format_double(p.linear[j]);
  out << "\n";
  if (p.quad) {
    out << "Q =\n";
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j)
        out << (j ? " " : "") << io::format_double((*p.quad)(i, j));
      out << "\n";
    }
  }
  for (Eigen::Index r = 0; r < p.eq_mat.rows(); ++r) {
    out << "eq :";
    for (Eigen::Index j = 0; j < n; ++j) out << ' ' << io::format_double(p.eq_mat(r, j));
    out << " = " << io::format_double(p.eq_rhs[r]) << "\n";
  }
  for (Eigen::Index r = 0; r < p.ineq_mat.rows(); ++r) {
    out << "ineq:";
    for (Eigen::Index j = 0; j < n; ++j) out << ' ' << io::format_double(p.ineq_mat(r, j));
    out << " >= " << io::format_double(p.ineq_rhs[r]) << "\n";
  }
  out << "bounds: v >= ";
  if (p.lower_bounds.size() == 0) out << "0 (all)";
  else
    for (Eigen::Index j = 0; j < n; ++j)
      out << (j ? " " : "") << io::format_double(p.lower_bounds[j]);
  if (!p.free_vars.empty()) {
    out << ", free:";
    for (Eigen::Index i : p.free_vars) out << ' ' << i;
  }
  out << "\n";
  return out.str();
}

}  // namespace maxdiv::solver
