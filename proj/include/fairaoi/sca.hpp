#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "fairaoi/aoi_shs.hpp"
#include "fairaoi/common.hpp"
#include "fairaoi/evaluate.hpp"
#include "fairaoi/scenario.hpp"
#include "fairaoi/sps_access.hpp"

namespace fairaoi {

struct ScalarizationWeights {
  std::vector<double> lambda;  // N_v fairness weights then the AoI weight
};

inline void validate_weights(const ScalarizationWeights& lam, std::size_t n_vehicles) {
  if (lam.lambda.size() != n_vehicles + 1)
    throw std::domain_error("weights: expected one weight per vehicle plus the age weight");
  double s = 0.0;
  for (double l : lam.lambda) {
    if (l < 0) throw std::domain_error("weights: negative weight");
    s += l;
  }
  if (s <= 0) throw std::domain_error("weights: all weights are zero");
}

/*! Weighted sum of the deviations and the mean age. */
inline double scalarize(const ObjectiveVector& obj, const ScalarizationWeights& lam) {
  validate_weights(lam, obj.fairness_dev.size());
  double s = 0.0;
  for (std::size_t v = 0; v < obj.fairness_dev.size(); ++v) s += lam.lambda[v] * obj.fairness_dev[v];
  return s + lam.lambda.back() * obj.mean_aoi;
}

// First-order model value0 + grad . (w - w_t), gradient in per-slot units.
struct AffineModel {
  double value0 = 0.0;
  std::vector<double> grad;

  double at(const std::vector<double>& w, const std::vector<double>& w_t) const {
    double s = value0;
    for (std::size_t i = 0; i < grad.size(); ++i) s += grad[i] * (w[i] - w_t[i]);
    return s;
  }
};

/*!
 * Affine model of log PR_v = sum_{j != v} log(1 - delta_vj) at w_t, using
 * the analytic collision derivatives.
 */
inline AffineModel linearize_log_pr(const std::vector<double>& w_t, std::size_t v,
                                    const CollisionParams& p) {
  if (v >= w_t.size()) throw std::domain_error("linearize_log_pr: vehicle index out of range");
  AffineModel m;
  m.grad.assign(w_t.size(), 0.0);
  for (std::size_t j = 0; j < w_t.size(); ++j) {
    if (j == v) continue;
    CollisionValue cv = collision_prob_grad(w_t[v], w_t[j], p);
    double rem = 1.0 - cv.delta;
    if (rem <= 0) throw model_error("linearize_log_pr: collision probability reached one");
    m.value0 += std::log(rem);
    m.grad[v] += -cv.d_wv / rem;
    m.grad[j] += -cv.d_wj / rem;
  }
  return m;
}

/*!
 * Affine model of the fairness index of vehicle v. The exponential of the
 * affine log-PR model is itself linearized, so the slope is
 * G_v(w_t) * grad(log PR_v).
 */
inline AffineModel linearize_fairness(const std::vector<double>& w_t, std::size_t v,
                                      const std::vector<Vehicle>& vehicles,
                                      const ScenarioConfig& cfg) {
  if (vehicles.size() != w_t.size())
    throw std::domain_error("linearize_fairness: vehicle count mismatch");
  CollisionParams p = CollisionParams::from(cfg);
  AffineModel lp = linearize_log_pr(w_t, v, p);
  double pr = std::exp(lp.value0);
  double g0 = fairness_index(vehicles[v].iss, snr_linear(vehicles[v], cfg), pr,
                             vehicles[v].speed_mps);
  AffineModel m;
  m.value0 = g0;
  m.grad.resize(w_t.size());
  for (std::size_t i = 0; i < w_t.size(); ++i) m.grad[i] = g0 * lp.grad[i];
  return m;
}

/*!
 * Affine model of the mean age. Writing u = w * slot, c1 = overhead,
 * c2 = overhead + retransmission time and c3 = reeval rate, each link
 * contributes A1 = (u+c2)(1 - c3(u+c1)) (per-link head term), occupancy
 * ratio rho = (u+c1)/((u+c2) g) and tail term beta = (u+c1)^2/((u+c2) g^2)
 * with g = 1 - c3(u+c1); the mean age is mean(A1) * N_F + sum(beta)/N_F,
 * N_F = 1 + sum(rho). The gradient applies the product and quotient rules
 * per coordinate.
 */
inline AffineModel linearize_aoi(const std::vector<double>& w_t, const ScenarioConfig& cfg) {
  const std::size_t n = w_t.size();
  if (n == 0) throw std::domain_error("linearize_aoi: empty window vector");
  const double slot = cfg.slot_seconds();
  const double c1 = cfg.overhead_s();
  const double c2 = cfg.overhead_s() + cfg.n_retx * cfg.t_retx_s;
  const double c3 = 1.0 / cfg.t_reeval_s;

  std::vector<double> a1(n), a1p(n), rho(n), rhop(n), beta(n), betap(n);
  double nf = 1.0, sum_a1 = 0.0, sum_beta = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double u = w_t[k] * slot;
    double f = u + c1;
    double h = u + c2;
    double g = 1.0 - c3 * f;
    if (g <= 0) throw infeasible_rates_error(k, "re-evaluation rate reaches the service rate");
    a1[k] = h * g;
    a1p[k] = 1.0 - c3 * (2.0 * u + c1 + c2);
    rho[k] = f / (h * g);
    rhop[k] = (g * (c2 - c1) + c3 * f * h) / (h * g * h * g);
    beta[k] = f * f / (h * g * g);
    betap[k] = f * (2.0 * h * g - f * (g - 2.0 * c3 * h)) / (h * h * g * g * g);
    nf += rho[k];
    sum_a1 += a1[k];
    sum_beta += beta[k];
  }
  double mean_a1 = sum_a1 / static_cast<double>(n);

  AffineModel m;
  m.value0 = mean_a1 * nf + sum_beta / nf;
  m.grad.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    double d = (a1p[k] / static_cast<double>(n)) * nf + mean_a1 * rhop[k] +
               (betap[k] * nf - sum_beta * rhop[k]) / (nf * nf);
    m.grad[k] = d * slot;  // chain rule back to slots
  }
  return m;
}

struct LinearizedModel {
  std::vector<double> w_t;
  std::vector<AffineModel> log_pr;    // per vehicle
  std::vector<AffineModel> fairness;  // per vehicle
  AffineModel aoi;
};

inline LinearizedModel build_model(const std::vector<double>& w_t,
                                   const std::vector<Vehicle>& vehicles,
                                   const ScenarioConfig& cfg) {
  if (vehicles.size() != w_t.size()) throw std::domain_error("build_model: size mismatch");
  LinearizedModel m;
  m.w_t = w_t;
  CollisionParams p = CollisionParams::from(cfg);
  m.log_pr.reserve(w_t.size());
  m.fairness.reserve(w_t.size());
  for (std::size_t v = 0; v < w_t.size(); ++v) {
    m.log_pr.push_back(linearize_log_pr(w_t, v, p));
    m.fairness.push_back(linearize_fairness(w_t, v, vehicles, cfg));
  }
  m.aoi = linearize_aoi(w_t, cfg);
  return m;
}

namespace detail {

// Row-bounded linear program: min c.x subject to lo <= A x <= up.
struct BoundedLp {
  std::size_t nx = 0;
  std::vector<double> c;
  std::size_t m = 0;
  std::vector<double> a;  // m x nx, row major
  std::vector<double> lo, up;
};

struct LpSolution {
  std::vector<double> x;
  std::vector<double> row_duals;
  double objective = 0.0;
  int iterations = 0;
  bool polished = false;
  double primal_residual = 0.0;
};

// Gaussian elimination with partial pivoting; false on singular systems.
inline bool lu_solve(std::vector<double> a, std::size_t n, std::vector<double>& b) {
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::fabs(a[r * n + col]) > std::fabs(a[piv * n + col])) piv = r;
    if (std::fabs(a[piv * n + col]) < 1e-13) return false;
    if (piv != col) {
      for (std::size_t k = 0; k < n; ++k) std::swap(a[piv * n + k], a[col * n + k]);
      std::swap(b[piv], b[col]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      double f = a[r * n + col] / a[col * n + col];
      if (f == 0) continue;
      for (std::size_t k = col; k < n; ++k) a[r * n + k] -= f * a[col * n + k];
      b[r] -= f * b[col];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = b[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= a[ii * n + k] * b[k];
    b[ii] = s / a[ii * n + ii];
  }
  return true;
}

inline void mat_vec(const std::vector<double>& a, std::size_t m, std::size_t n,
                    const std::vector<double>& x, std::vector<double>& out) {
  out.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += a[i * n + j] * x[j];
    out[i] = s;
  }
}

/*!
 * Exact active-set solve of the bounded LP `min c.x  s.t.  lo <= A x <= up`.
 * Starting from a caller-supplied feasible point, the solver first crashes
 * onto a vertex by walking directions that keep the rows collected so far
 * pinned (preferring descent), then pivots with Bland's smallest-index rule:
 * the leaving row is the first working row whose multiplier has the wrong
 * sign, the entering row is the first blocking row of the ratio test. Every
 * vertex is re-derived from its defining rows, so rounding error cannot
 * accumulate across pivots. Throws when the start point is infeasible, the
 * objective is unbounded over the rows, or the pivot budget runs out.
 */
inline LpSolution solve_bounded_lp(const BoundedLp& lp, int max_iters,
                                   const std::vector<double>& x_start) {
  const std::size_t n = lp.nx, m = lp.m;
  if (x_start.size() != n) throw std::domain_error("solve_bounded_lp: start point size mismatch");
  if (m < n) throw std::domain_error("solve_bounded_lp: fewer rows than dimensions");

  double bscale = 1.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (std::isfinite(lp.lo[i])) bscale = std::max(bscale, std::fabs(lp.lo[i]));
    if (std::isfinite(lp.up[i])) bscale = std::max(bscale, std::fabs(lp.up[i]));
  }
  std::vector<double> rnorm(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) rnorm[i] = std::max(rnorm[i], std::fabs(lp.a[i * n + j]));

  std::vector<double> x = x_start, ax;
  mat_vec(lp.a, m, n, x, ax);
  for (std::size_t i = 0; i < m; ++i)
    if (std::max(lp.lo[i] - ax[i], ax[i] - lp.up[i]) > 1e-7 * bscale)
      throw model_error("subproblem: start point violates the constraint rows");

  std::vector<std::size_t> wrows;  // working set: one row per dimension once crashed
  std::vector<bool> wup;           // side of the pinned bound (true = upper)
  std::vector<bool> in_w(m, false);
  std::vector<bool> shadowed(m, false);  // crash-phase rows implied by pinned rows

  // First blocking row along direction d from the current point. Rows in the
  // working set are skipped: their values do not move along a pivot or crash
  // direction, and fp noise there must not fabricate zero-length blocks.
  struct Block {
    bool found = false;
    std::size_t row = 0;
    bool at_up = false;
    double t = 0.0;
  };
  auto ratio_test = [&](const std::vector<double>& d) {
    Block blk;
    std::vector<double> ad;
    mat_vec(lp.a, m, n, d, ad);
    double dmax = 0.0;
    for (double dj : d) dmax = std::max(dmax, std::fabs(dj));
    for (std::size_t i = 0; i < m; ++i) {
      if (in_w[i] || shadowed[i]) continue;
      double gtol = 1e-11 * (1.0 + rnorm[i] * dmax);
      double g = ad[i];
      double t;
      bool at_up;
      if (g > gtol && std::isfinite(lp.up[i])) {
        t = (lp.up[i] - ax[i]) / g;
        at_up = true;
      } else if (g < -gtol && std::isfinite(lp.lo[i])) {
        t = (lp.lo[i] - ax[i]) / g;
        at_up = false;
      } else {
        continue;
      }
      t = std::max(t, 0.0);  // clip fp noise on rows already sitting at a bound
      if (!blk.found || t < blk.t - 1e-9 * (1.0 + blk.t)) {
        blk.found = true;  // ascending scan keeps the smallest row index on ties
        blk.row = i;
        blk.at_up = at_up;
        blk.t = t;
      }
    }
    return blk;
  };

  // Crash phase: extend the working set to a full vertex basis. The basis is
  // kept orthonormal with re-orthogonalized (two-pass) projections; one pass
  // leaks enough span error after near-dependent rows to let the ratio test
  // admit a row the pinned ones already imply (e.g. both epigraph rows of a
  // vehicle pin its z at zero, making the z lower bound redundant). Such rows
  // do not raise the basis rank: they are shadowed instead of pinned, and the
  // walk continues to the next blocking row.
  double cmax = 0.0;
  for (double cj : lp.c) cmax = std::max(cmax, std::fabs(cj));
  std::vector<std::vector<double>> basis;  // orthonormalized working rows
  auto project_out = [&](std::vector<double>& v) {
    for (int pass = 0; pass < 2; ++pass) {
      for (const auto& b : basis) {
        double dot = 0.0;
        for (std::size_t j = 0; j < n; ++j) dot += v[j] * b[j];
        for (std::size_t j = 0; j < n; ++j) v[j] -= dot * b[j];
      }
    }
    double norm = 0.0;
    for (double t : v) norm += t * t;
    return std::sqrt(norm);
  };
  auto add_to_basis = [&](std::vector<double> v, double scale) {
    double norm = project_out(v);
    if (norm < 1e-10 * scale) return false;
    for (double& t : v) t /= norm;
    basis.push_back(std::move(v));
    return true;
  };
  while (wrows.size() < n) {
    // first coordinate direction with mass outside the span of the basis
    std::vector<double> d;
    for (std::size_t j = 0; j < n && d.empty(); ++j) {
      std::vector<double> v(n, 0.0);
      v[j] = 1.0;
      double norm = project_out(v);
      if (norm > 1e-9) {
        for (double& t : v) t /= norm;
        d = std::move(v);
      }
    }
    if (d.empty())
      throw model_error("subproblem: could not complete a vertex basis from the start point");
    double cd = 0.0;
    for (std::size_t j = 0; j < n; ++j) cd += lp.c[j] * d[j];
    if (cd > 0)
      for (double& t : d) t = -t;
    for (;;) {
      Block blk = ratio_test(d);
      if (!blk.found) {
        if (std::fabs(cd) > 1e-12 * (1.0 + cmax))
          throw model_error("subproblem: objective is unbounded over the constraint rows");
        for (double& t : d) t = -t;
        cd = -cd;
        blk = ratio_test(d);
        if (!blk.found) throw model_error("subproblem: constraint rows leave a free direction");
      }
      std::vector<double> row(lp.a.begin() + static_cast<std::ptrdiff_t>(blk.row * n),
                              lp.a.begin() + static_cast<std::ptrdiff_t>((blk.row + 1) * n));
      if (!add_to_basis(std::move(row), std::max(rnorm[blk.row], 1e-30))) {
        shadowed[blk.row] = true;  // rank-deficient against the pinned rows
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) x[j] += blk.t * d[j];
      mat_vec(lp.a, m, n, x, ax);
      ax[blk.row] = blk.at_up ? lp.up[blk.row] : lp.lo[blk.row];  // pinned exactly
      wrows.push_back(blk.row);
      wup.push_back(blk.at_up);
      in_w[blk.row] = true;
      break;
    }
  }
  std::fill(shadowed.begin(), shadowed.end(), false);  // pivots may unpin the implying rows

  // Pivot phase.
  std::vector<double> yw(n), bw(n);
  int pivots = 0;
  for (;; ++pivots) {
    if (pivots >= max_iters)
      throw model_error("subproblem: active-set pivoting exceeded " + std::to_string(max_iters) +
                        " iterations");
    std::vector<double> aw(n * n);
    for (std::size_t k = 0; k < n; ++k) {
      for (std::size_t j = 0; j < n; ++j) aw[k * n + j] = lp.a[wrows[k] * n + j];
      bw[k] = wup[k] ? lp.up[wrows[k]] : lp.lo[wrows[k]];
    }
    x = bw;
    if (!lu_solve(aw, n, x)) throw model_error("subproblem: working set became singular");
    mat_vec(lp.a, m, n, x, ax);
    for (std::size_t k = 0; k < n; ++k) ax[wrows[k]] = bw[k];

    std::vector<double> awt(n * n);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < n; ++j) awt[j * n + k] = aw[k * n + j];
    for (std::size_t j = 0; j < n; ++j) yw[j] = -lp.c[j];
    if (!lu_solve(awt, n, yw)) throw model_error("subproblem: working set became singular");

    double ymax = 1.0;
    for (std::size_t k = 0; k < n; ++k) ymax = std::max(ymax, std::fabs(yw[k]));
    const double stol = 1e-9 * ymax;
    std::size_t leave = n;  // smallest row index with a wrong-signed multiplier
    for (std::size_t k = 0; k < n; ++k) {
      bool wrong = wup[k] ? (yw[k] < -stol) : (yw[k] > stol);
      if (wrong && (leave == n || wrows[k] < wrows[leave])) leave = k;
    }
    if (leave == n) break;  // multipliers certify optimality

    // Move off the leaving bound while the other working rows stay pinned;
    // the leaving row re-enters the ratio test so its opposite bound can block.
    std::vector<double> d(n, 0.0);
    d[leave] = wup[leave] ? -1.0 : 1.0;
    if (!lu_solve(aw, n, d)) throw model_error("subproblem: working set became singular");
    in_w[wrows[leave]] = false;
    Block blk = ratio_test(d);
    if (!blk.found)
      throw model_error("subproblem: objective is unbounded over the constraint rows");
    in_w[blk.row] = true;
    wrows[leave] = blk.row;
    wup[leave] = blk.at_up;
  }

  LpSolution sol;
  sol.x = x;
  sol.row_duals.assign(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) sol.row_duals[wrows[k]] = yw[k];
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.c[j] * x[j];
  sol.iterations = pivots;
  sol.polished = true;
  double viol = 0.0;
  for (std::size_t i = 0; i < m; ++i)
    viol = std::max(viol, std::max(lp.lo[i] - ax[i], ax[i] - lp.up[i]));
  sol.primal_residual = std::max(viol, 0.0);
  if (viol > 1e-8 * bscale)
    throw model_error("subproblem: solved vertex violates the constraint rows");
  return sol;
}

}  // namespace detail

struct SubproblemSolution {
  std::vector<double> delta_w;  // step relative to the expansion point
  std::vector<double> z;        // epigraph values at the solution
  double model_objective = 0.0;
  int iterations = 0;
  bool polished = false;
};

/*!
 * Epigraph form of the scalarized linearized problem: minimize
 * sum_v lambda_v z_v + lambda_age * (affine age) over the window box with
 * z_v >= |affine deviation of vehicle v|. A graded tie-break perturbation
 * steers degenerate faces to the lexicographically smallest window vector.
 */
inline SubproblemSolution solve_subproblem(const LinearizedModel& model,
                                           const ScalarizationWeights& lam, double w_min,
                                           double w_max, int iter_cap = 20000) {
  const std::size_t n = model.fairness.size();
  if (n == 0) throw std::domain_error("solve_subproblem: empty model");
  validate_weights(lam, n);
  if (w_min > w_max) throw config_error("solve_subproblem: window box is empty (w_min > w_max)");

  // Deviation models d_v = fairness_v - mean(fairness).
  std::vector<double> dev0(n);
  std::vector<std::vector<double>> q(n, std::vector<double>(n, 0.0));
  double mean0 = 0.0;
  std::vector<double> mean_grad(n, 0.0);
  for (std::size_t v = 0; v < n; ++v) {
    mean0 += model.fairness[v].value0;
    for (std::size_t k = 0; k < n; ++k) mean_grad[k] += model.fairness[v].grad[k];
  }
  mean0 /= static_cast<double>(n);
  for (double& g : mean_grad) g /= static_cast<double>(n);
  for (std::size_t v = 0; v < n; ++v) {
    dev0[v] = model.fairness[v].value0 - mean0;
    for (std::size_t k = 0; k < n; ++k) q[v][k] = model.fairness[v].grad[k] - mean_grad[k];
  }

  const double inf = std::numeric_limits<double>::infinity();
  detail::BoundedLp lp;
  lp.nx = 2 * n;
  lp.c.assign(2 * n, 0.0);
  const double lam_age = lam.lambda[n];
  for (std::size_t k = 0; k < n; ++k) lp.c[k] = lam_age * model.aoi.grad[k];
  for (std::size_t v = 0; v < n; ++v) lp.c[n + v] = lam.lambda[v];

  double cscale = 1.0;
  for (double ci : lp.c) cscale = std::max(cscale, std::fabs(ci));
  double tie = 1e-7 * cscale;
  for (std::size_t k = 0; k < n; ++k) lp.c[k] += tie * std::pow(0.25, static_cast<double>(k + 1));
  for (std::size_t v = 0; v < n; ++v) lp.c[n + v] += 1e-9 * cscale;

  lp.m = 4 * n;
  lp.a.assign(lp.m * lp.nx, 0.0);
  lp.lo.assign(lp.m, -inf);
  lp.up.assign(lp.m, inf);
  double span = w_max - w_min;
  for (std::size_t k = 0; k < n; ++k) {  // box rows
    lp.a[k * lp.nx + k] = 1.0;
    lp.lo[k] = w_min - model.w_t[k];
    lp.up[k] = w_max - model.w_t[k];
  }
  for (std::size_t v = 0; v < n; ++v) {  // z_v - d_v >= 0 and z_v + d_v >= 0
    std::size_t r1 = n + v, r2 = 2 * n + v;
    for (std::size_t k = 0; k < n; ++k) {
      lp.a[r1 * lp.nx + k] = -q[v][k];
      lp.a[r2 * lp.nx + k] = q[v][k];
    }
    lp.a[r1 * lp.nx + n + v] = 1.0;
    lp.a[r2 * lp.nx + n + v] = 1.0;
    lp.lo[r1] = dev0[v];
    lp.lo[r2] = -dev0[v];
  }
  for (std::size_t v = 0; v < n; ++v) {  // z box keeps the polytope bounded
    std::size_t r = 3 * n + v;
    lp.a[r * lp.nx + n + v] = 1.0;
    double qs = 0.0;
    for (std::size_t k = 0; k < n; ++k) qs += std::fabs(q[v][k]);
    lp.lo[r] = 0.0;
    lp.up[r] = std::fabs(dev0[v]) + qs * span + 1.0;
  }

  // No window move with the epigraph values at the absolute deviations is
  // always feasible; it anchors the vertex search.
  std::vector<double> feas(2 * n, 0.0);
  for (std::size_t v = 0; v < n; ++v) feas[n + v] = std::fabs(dev0[v]);
  detail::LpSolution ls = detail::solve_bounded_lp(lp, iter_cap, feas);

  SubproblemSolution out;
  out.delta_w.assign(ls.x.begin(), ls.x.begin() + static_cast<std::ptrdiff_t>(n));
  out.z.assign(ls.x.begin() + static_cast<std::ptrdiff_t>(n), ls.x.end());
  out.iterations = ls.iterations;
  out.polished = ls.polished;
  // Report the model objective without the tie-break perturbation.
  out.model_objective = lam_age * model.aoi.value0;
  for (std::size_t k = 0; k < n; ++k) out.model_objective += lam_age * model.aoi.grad[k] * out.delta_w[k];
  for (std::size_t v = 0; v < n; ++v) out.model_objective += lam.lambda[v] * out.z[v];
  return out;
}

struct ScaState {
  int iterate = 0;
  std::vector<double> w;  // continuous, slots
  double objective = 0.0; // true (non-linearized) scalarized objective
  std::vector<double> z;  // epigraph values from the last subproblem
  bool converged = false;
};

struct ScaTracePoint {
  int iterate = 0;
  std::vector<double> w;
  double true_objective = 0.0;
  double step_norm = 0.0;
};

struct ScaResult {
  ScaState state;                  // last iterate
  std::vector<double> best_w;      // iterate with the lowest true objective
  double best_objective = 0.0;
  std::vector<int> rounded_w;      // best_w rounded to whole slots
  double rounded_objective = 0.0;
  std::vector<ScaTracePoint> trace;
  bool converged = false;
};

/*! Config overrides are taken literally. Otherwise the age term is
 *  normalized by its value at the reference point w0 (so it enters at unit
 *  scale) and the deviation terms share a total weight that balances the two
 *  blocks' aggregate gradient magnitudes at w0: value-scale matching would
 *  let the deviation block steer the whole window vector, while a fixed small
 *  weight would leave it inert, so the default equalizes the pull each block
 *  exerts on w instead. Deviations vanish identically for a single vehicle;
 *  the fairness mass then defaults to 1 (it multiplies zero anyway). */
inline ScalarizationWeights default_weights(const ScenarioConfig& cfg,
                                            const std::vector<Vehicle>& vehicles,
                                            const std::vector<double>& w0) {
  ScalarizationWeights lam;
  const std::size_t n = vehicles.size();
  double age_w = cfg.sca_lambda_aoi;
  double fair_total = cfg.sca_lambda_fairness;
  if (age_w <= 0 || fair_total <= 0) {
    Evaluation ev0 = evaluate_objectives(vehicles, w0, cfg);
    if (age_w <= 0) {
      double a0 = ev0.objectives.mean_aoi;
      age_w = a0 > 0 ? 1.0 / a0 : 1.0;
    }
    if (fair_total <= 0) {
      double grad_age = 0.0, grad_dev = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        std::vector<double> wp = w0, wm = w0;
        wp[k] = std::min(w0[k] + 1e-3, static_cast<double>(cfg.w_max_slots));
        wm[k] = std::max(w0[k] - 1e-3, static_cast<double>(cfg.w_min_slots));
        if (wp[k] <= wm[k]) continue;  // degenerate box: no room for a stencil
        Evaluation evp = evaluate_objectives(vehicles, wp, cfg);
        Evaluation evm = evaluate_objectives(vehicles, wm, cfg);
        double span = wp[k] - wm[k];
        grad_age += std::fabs(evp.objectives.mean_aoi - evm.objectives.mean_aoi) / span;
        double dp = 0.0, dm = 0.0;
        for (double d : evp.objectives.fairness_dev) dp += d;
        for (double d : evm.objectives.fairness_dev) dm += d;
        grad_dev += std::fabs(dp - dm) / static_cast<double>(n) / span;
      }
      fair_total = grad_dev > 0 ? age_w * grad_age / grad_dev : 1.0;
    }
  }
  lam.lambda.assign(n, fair_total / static_cast<double>(n));
  lam.lambda.push_back(age_w);
  return lam;
}

inline std::vector<double> box_midpoint(const ScenarioConfig& cfg, std::size_t n) {
  return std::vector<double>(n, 0.5 * (cfg.w_min_slots + cfg.w_max_slots));
}

inline std::vector<int> round_windows(const std::vector<double>& w, const ScenarioConfig& cfg) {
  std::vector<int> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    int s = static_cast<int>(std::floor(w[i] + 0.5));
    out[i] = std::clamp(s, cfg.w_min_slots, cfg.w_max_slots);
  }
  return out;
}

/*!
 * Damped successive approximation loop: linearize at w^t, solve the convex
 * subproblem, step w^{t+1} = beta_t * w_sub + (1-beta_t) * w^t, stop when the
 * step norm drops to eps or the iteration budget runs out. beta_t starts at
 * beta and is halved until the trial step earns a decrease proportional to
 * its squared length, so the accepted trace is non-increasing by construction
 * and cross-valley oscillation between distant subproblem vertices cannot
 * stall the step norm above eps; when no admissible damping earns its keep,
 * the iteration is stationary at the working resolution and stops where it
 * stands. Returns the full trace plus the best iterate by the true objective,
 * rounded to slots.
 */
inline ScaResult sca_run(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles,
                         const ScalarizationWeights& lam, std::vector<double> w0, double eps,
                         int g_max, double beta) {
  const std::size_t n = vehicles.size();
  if (n == 0) throw std::domain_error("sca_run: no vehicles");
  if (w0.size() != n) throw std::domain_error("sca_run: w0 size mismatch");
  validate_weights(lam, n);
  if (beta <= 0 || beta > 1) throw std::domain_error("sca_run: beta must lie in (0,1]");
  if (eps < 0) throw std::domain_error("sca_run: eps must be >= 0");
  if (g_max < 1) throw std::domain_error("sca_run: iteration budget must be >= 1");
  for (std::size_t i = 0; i < n; ++i)
    if (w0[i] < cfg.w_min_slots - 1e-9 || w0[i] > cfg.w_max_slots + 1e-9)
      throw std::domain_error("sca_run: start point outside the window box");

  auto dump = [](int t, const std::vector<double>& w) {
    std::string s = "iterate " + std::to_string(t) + ", w = [";
    for (std::size_t i = 0; i < w.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(w[i]);
    }
    return s + "]";
  };
  auto true_objective = [&](int t, const std::vector<double>& w_eval) {
    try {
      return scalarize(evaluate_objectives(vehicles, w_eval, cfg).objectives, lam);
    } catch (const infeasible_rates_error& e) {
      throw model_error(std::string("sca_run: infeasible rates at ") + dump(t, w_eval) + ": " +
                        e.what());
    }
  };

  ScaResult res;
  std::vector<double> w = w0;
  double obj = true_objective(0, w);
  res.trace.push_back({0, w, obj, 0.0});
  res.best_w = w;
  res.best_objective = obj;
  std::vector<double> last_z(n, 0.0);

  int t = 0;
  bool converged = false;
  for (; t < g_max; ++t) {
    SubproblemSolution sub;
    try {
      LinearizedModel model = build_model(w, vehicles, cfg);
      sub = solve_subproblem(model, lam, cfg.w_min_slots, cfg.w_max_slots,
                             cfg.sca_subproblem_iters);
    } catch (const infeasible_rates_error& e) {
      throw model_error(std::string("sca_run: infeasible rates at ") + dump(t, w) + ": " +
                        e.what());
    }
    std::vector<double> w_sub(n);
    for (std::size_t i = 0; i < n; ++i)
      w_sub[i] = std::clamp(w[i] + sub.delta_w[i], static_cast<double>(cfg.w_min_slots),
                            static_cast<double>(cfg.w_max_slots));
    std::vector<double> w_next(n);
    double step = 0.0, obj_next = 0.0, bt = beta;
    bool stationary = false;
    for (;;) {
      step = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        w_next[i] = bt * w_sub[i] + (1.0 - bt) * w[i];
        step += (w_next[i] - w[i]) * (w_next[i] - w[i]);
      }
      step = std::sqrt(step);
      obj_next = true_objective(t + 1, w_next);
      double earn = 1e-3 * step * step * (1.0 + std::fabs(obj));
      if (obj_next <= obj - earn + 1e-12 * (1.0 + std::fabs(obj))) break;
      if (step <= eps || bt < 1e-12) {  // every admissible damping from here stalls
        stationary = true;
        break;
      }
      bt *= 0.5;
    }
    if (stationary) {
      converged = true;
      break;
    }
    w = w_next;
    obj = obj_next;
    last_z = sub.z;
    res.trace.push_back({t + 1, w, obj, step});
    if (obj < res.best_objective) {
      res.best_objective = obj;
      res.best_w = w;
    }
    if (step <= eps) {
      converged = true;
      ++t;
      break;
    }
  }

  res.converged = converged;
  res.state.iterate = t;
  res.state.w = w;
  res.state.objective = obj;
  res.state.z = last_z;
  res.state.converged = converged;
  res.rounded_w = round_windows(res.best_w, cfg);
  std::vector<double> wr(res.rounded_w.begin(), res.rounded_w.end());
  res.rounded_objective = true_objective(t, wr);
  return res;
}

inline ScaResult sca_run(const ScenarioConfig& cfg, const std::vector<Vehicle>& vehicles) {
  std::vector<double> w0 = box_midpoint(cfg, vehicles.size());
  ScalarizationWeights lam;
  try {
    lam = default_weights(cfg, vehicles, w0);
  } catch (const infeasible_rates_error& e) {
    std::string s = "sca_run: infeasible rates at iterate 0, w = [";
    for (std::size_t i = 0; i < w0.size(); ++i) {
      if (i) s += ", ";
      s += std::to_string(w0[i]);
    }
    throw model_error(s + "]: " + e.what());
  }
  return sca_run(cfg, vehicles, lam, w0, cfg.sca_eps_slots, cfg.sca_gmax, cfg.sca_beta);
}

}  // namespace fairaoi
