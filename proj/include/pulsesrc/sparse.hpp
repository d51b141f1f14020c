#pragma once

// l1-regularized least squares for one query:
//
//   minimize  0.5 * ||x - D a||^2 + lambda * ||a||_1
//
// solved exactly by an active-set (feature-sign) method. Every return carries
// the KKT residual of the subgradient optimality conditions as a certificate.

#include <Eigen/Dense>

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "pulsesrc/error.hpp"

namespace pulsesrc {

struct SolverConfig {
  double lambda = 0.2;
  int max_iter = 10000;   // active-set steps
  double tol_kkt = 1e-6;
  double tol_obj = 1e-10;  // relative decrease below which a step counts as no progress

  void validate() const {
    if (!(lambda >= 0.0)) throw PreconditionError("lambda must be >= 0");
    if (!(tol_kkt > 0.0 && tol_obj > 0.0)) throw PreconditionError("tolerances must be > 0");
    if (max_iter < 1) throw PreconditionError("max_iter must be >= 1");
  }
};

struct SparseCode {
  Eigen::VectorXd alpha;
  double objective = 0.0;
  double kkt_residual = 0.0;
  int iterations = 0;
  int nnz = 0;
  bool converged = false;
};

constexpr double soft_threshold(double z, double t) {
  if (z > t) return z - t;
  if (z < -t) return z + t;
  return 0.0;
}

inline double l1ls_objective(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::MatrixXd>& D,
                             const Eigen::Ref<const Eigen::VectorXd>& alpha, double lambda) {
  return 0.5 * (x - D * alpha).squaredNorm() + lambda * alpha.lpNorm<1>();
}

/// Largest violation of the optimality conditions, with g = D^T (x - D a):
///   a_k == 0 : max(|g_k| - lambda, 0)
///   a_k != 0 : |g_k - lambda * sign(a_k)|
inline double kkt_residual(const Eigen::Ref<const Eigen::VectorXd>& x,
                           const Eigen::Ref<const Eigen::MatrixXd>& D,
                           const Eigen::Ref<const Eigen::VectorXd>& alpha, double lambda) {
  if (D.rows() != x.size() || D.cols() != alpha.size())
    throw PreconditionError("kkt_residual: shape mismatch");
  const Eigen::VectorXd g = D.transpose() * (x - D * alpha);
  double worst = 0.0;
  for (Eigen::Index k = 0; k < alpha.size(); ++k) {
    const double v = alpha[k] == 0.0 ? std::max(std::abs(g[k]) - lambda, 0.0)
                                     : std::abs(g[k] - lambda * (alpha[k] > 0 ? 1.0 : -1.0));
    worst = std::max(worst, v);
  }
  return worst;
}

namespace detail {

// Objective from the Gram form: 0.5 x'x - b'a + 0.5 a'Ga + lambda |a|_1.
inline double gram_objective(double half_xx, const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                             const Eigen::VectorXd& a, double lambda) {
  return half_xx - b.dot(a) + 0.5 * a.dot(G * a) + lambda * a.lpNorm<1>();
}

// Minimizer of the smooth objective restricted to `support` with fixed signs.
inline Eigen::VectorXd restricted_solve(const Eigen::MatrixXd& G, const Eigen::VectorXd& b,
                                        double lambda, const std::vector<Eigen::Index>& support,
                                        const Eigen::VectorXd& signs) {
  const auto s = static_cast<Eigen::Index>(support.size());
  Eigen::MatrixXd Gs(s, s);
  Eigen::VectorXd rhs(s);
  for (Eigen::Index i = 0; i < s; ++i) {
    for (Eigen::Index j = 0; j < s; ++j) Gs(i, j) = G(support[i], support[j]);
    rhs[i] = b[support[i]] - lambda * signs[support[i]];
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(Gs);
  const auto& d = ldlt.vectorD();
  if (ldlt.info() == Eigen::Success && d.minCoeff() > 1e-12 * std::max(1.0, d.maxCoeff()))
    return ldlt.solve(rhs);
  // Rank-deficient support (duplicate or dependent atoms): minimum-norm solution.
  return Gs.completeOrthogonalDecomposition().solve(rhs);
}

// When the support (with a newly activated coordinate) is linearly dependent
// the sign-restricted quadratic has no minimizer. Instead move along a null
// direction of D restricted to the support, oriented downhill for the l1
// term, up to the first coefficient that reaches zero.
inline std::optional<Eigen::VectorXd> null_step(const Eigen::MatrixXd& G, double lambda,
                                                const std::vector<Eigen::Index>& sup,
                                                const Eigen::VectorXd& signs,
                                                const Eigen::VectorXd& a, const Eigen::VectorXd& g) {
  const auto s = static_cast<Eigen::Index>(sup.size());
  if (s < 2) return std::nullopt;
  Eigen::MatrixXd Gs(s, s);
  for (Eigen::Index i = 0; i < s; ++i)
    for (Eigen::Index j = 0; j < s; ++j) Gs(i, j) = G(sup[i], sup[j]);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gs);
  const auto& ev = eig.eigenvalues();
  if (ev[0] > 1e-10 * std::max(1.0, ev[s - 1])) return std::nullopt;
  Eigen::VectorXd d = eig.eigenvectors().col(0);
  double slope = 0.0;
  for (Eigen::Index i = 0; i < s; ++i) slope += (lambda * signs[sup[i]] - g[sup[i]]) * d[i];
  if (slope > 0) d = -d;
  double t = std::numeric_limits<double>::infinity();
  Eigen::Index hit = -1;
  for (Eigen::Index i = 0; i < s; ++i) {
    const double ai = a[sup[i]];
    if (ai == 0.0) {
      if (signs[sup[i]] * d[i] < 0) return std::nullopt;  // would enter with the wrong sign
      continue;
    }
    if (ai * d[i] >= 0) continue;
    const double ti = -ai / d[i];
    if (ti < t) t = ti, hit = i;
  }
  if (hit < 0) return std::nullopt;
  Eigen::VectorXd out = a;
  for (Eigen::Index i = 0; i < s; ++i) out[sup[i]] += t * d[i];
  out[sup[hit]] = 0.0;
  return out;
}

// While the support's Gram block is singular, slide along a null direction
// (which leaves D*a unchanged) until one coefficient reaches zero, choosing
// the direction that does not increase |a|_1. Keeps the support linearly
// independent so the restricted solves stay well posed.
inline void prune_dependent(const Eigen::MatrixXd& G, const Eigen::VectorXd& b, double half_xx,
                            double lambda, Eigen::VectorXd& a, double& obj) {
  while (true) {
    std::vector<Eigen::Index> sup;
    for (Eigen::Index k = 0; k < a.size(); ++k)
      if (a[k] != 0.0) sup.push_back(k);
    const auto s = static_cast<Eigen::Index>(sup.size());
    if (s < 2) return;
    Eigen::MatrixXd Gs(s, s);
    for (Eigen::Index i = 0; i < s; ++i)
      for (Eigen::Index j = 0; j < s; ++j) Gs(i, j) = G(sup[i], sup[j]);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(Gs);
    const auto& ev = eig.eigenvalues();
    if (ev[0] > 1e-10 * std::max(1.0, ev[s - 1])) return;
    Eigen::VectorXd d = eig.eigenvectors().col(0);
    double slope = 0.0;
    for (Eigen::Index i = 0; i < s; ++i) slope += (a[sup[i]] > 0 ? 1.0 : -1.0) * d[i];
    if (slope > 0) d = -d;
    double t = std::numeric_limits<double>::infinity();
    Eigen::Index hit = -1;
    for (Eigen::Index i = 0; i < s; ++i) {
      if (a[sup[i]] * d[i] >= 0) continue;
      const double ti = -a[sup[i]] / d[i];
      if (ti < t) t = ti, hit = i;
    }
    if (hit < 0) return;
    Eigen::VectorXd next = a;
    for (Eigen::Index i = 0; i < s; ++i) next[sup[i]] += t * d[i];
    next[sup[hit]] = 0.0;
    const double o = gram_objective(half_xx, G, b, next, lambda);
    if (o > obj + 1e-14 * std::max(1.0, std::abs(obj))) return;
    a = std::move(next);
    obj = std::min(obj, o);
  }
}

}  // namespace detail

/// Solves the l1-regularized least-squares problem for `x` against `D` by
/// feature-sign search: grow the support one most-violating coordinate at a
/// time, solve the sign-restricted quadratic in closed form, and line-search
/// over the zero crossings between the current and new point so the objective
/// never increases. Terminates when the KKT residual is within `cfg.tol_kkt`;
/// otherwise the best iterate is returned with `converged == false`.
inline SparseCode solve_l1ls(const Eigen::Ref<const Eigen::VectorXd>& x,
                             const Eigen::Ref<const Eigen::MatrixXd>& D,
                             const SolverConfig& cfg) {
  cfg.validate();
  if (D.rows() != x.size())
    throw PreconditionError("solve_l1ls: query length " + std::to_string(x.size()) +
                            " != dictionary rows " + std::to_string(D.rows()));
  if (!x.allFinite()) throw PreconditionError("solve_l1ls: query has non-finite values");

  const Eigen::Index p = D.cols();
  const double lambda = cfg.lambda;
  const Eigen::MatrixXd G = D.transpose() * D;
  const Eigen::VectorXd b = D.transpose() * x;
  const double half_xx = 0.5 * x.squaredNorm();
  const double inner_tol = 1e-12 * std::max(1.0, b.cwiseAbs().maxCoeff());

  SparseCode code;
  code.alpha = Eigen::VectorXd::Zero(p);
  Eigen::VectorXd& a = code.alpha;
  Eigen::VectorXd signs = Eigen::VectorXd::Zero(p);
  double obj = half_xx;
  std::vector<char> blocked(static_cast<std::size_t>(p), 0);

  auto support_of = [&] {
    std::vector<Eigen::Index> sup;
    for (Eigen::Index k = 0; k < p; ++k)
      if (signs[k] != 0.0) sup.push_back(k);
    return sup;
  };

  code.kkt_residual = kkt_residual(x, D, a, lambda);
  int stalled = 0;
  while (code.kkt_residual > cfg.tol_kkt && code.iterations < cfg.max_iter) {
    ++code.iterations;
    const Eigen::VectorXd g = b - G * a;

    // Active coordinates off their optimality condition get a feature-sign
    // step; otherwise activate the zero coordinate violating |g_k| <= lambda most.
    double active_violation = 0.0;
    for (Eigen::Index k = 0; k < p; ++k)
      if (signs[k] != 0.0)
        active_violation = std::max(active_violation, std::abs(g[k] - lambda * signs[k]));
    if (active_violation <= inner_tol) {
      Eigen::Index best = -1;
      double best_v = lambda + inner_tol;
      for (Eigen::Index k = 0; k < p; ++k) {
        if (signs[k] != 0.0 || blocked[static_cast<std::size_t>(k)] || !(G(k, k) > 0.0)) continue;
        if (std::abs(g[k]) > best_v) {
          best_v = std::abs(g[k]);
          best = k;
        }
      }
      if (best < 0) break;  // nothing left to activate
      signs[best] = g[best] > 0 ? 1.0 : -1.0;
    }

    const auto sup = support_of();
    Eigen::VectorXd target;
    if (auto step = detail::null_step(G, lambda, sup, signs, a, g)) {
      target = std::move(*step);
    } else {
      const Eigen::VectorXd z = detail::restricted_solve(G, b, lambda, sup, signs);
      target = Eigen::VectorXd::Zero(p);
      for (std::size_t i = 0; i < sup.size(); ++i) target[sup[i]] = z[static_cast<Eigen::Index>(i)];
    }

    // Candidate points: the restricted optimum and every sign change on the
    // segment toward it (with the crossing coordinate set exactly to zero).
    Eigen::VectorXd best_point = target;
    double best_obj = detail::gram_objective(half_xx, G, b, target, lambda);
    for (auto k : sup) {
      const double from = a[k];
      const double to = target[k];
      if (from == 0.0 || from * to > 0.0) continue;
      const double t = from / (from - to);
      Eigen::VectorXd pt = a + t * (target - a);
      pt[k] = 0.0;
      const double o = detail::gram_objective(half_xx, G, b, pt, lambda);
      if (o < best_obj) {
        best_obj = o;
        best_point = std::move(pt);
      }
    }

    if (best_obj <= obj) {
      stalled = obj - best_obj > cfg.tol_obj * std::max(1.0, std::abs(obj)) ? 0 : stalled + 1;
      a = best_point;
      obj = best_obj;
      detail::prune_dependent(G, b, half_xx, lambda, a, obj);
      std::fill(blocked.begin(), blocked.end(), 0);
    } else {
      // No decrease along this step: drop the newest sign guess and keep it
      // out of the support until progress resumes.
      ++stalled;
      for (auto k : sup)
        if (a[k] == 0.0) blocked[static_cast<std::size_t>(k)] = 1;
    }
    for (Eigen::Index k = 0; k < p; ++k) signs[k] = a[k] > 0 ? 1.0 : (a[k] < 0 ? -1.0 : 0.0);
    code.kkt_residual = kkt_residual(x, D, a, lambda);
    if (stalled > p + 2) break;
  }
  code.converged = code.kkt_residual <= cfg.tol_kkt;
  code.objective = l1ls_objective(x, D, a, lambda);
  code.nnz = static_cast<int>((a.array() != 0.0).count());
  return code;
}

}  // namespace pulsesrc
