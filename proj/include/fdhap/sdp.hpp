#pragma once

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <limits>
#include <vector>

#include "fdhap/types.hpp"

namespace fdhap::sdp {

// Convex program over a Hermitian PSD variable X (n x n) and auxiliary
// reals tau (one per entry of a_mats):
//
//   maximize  <C, X> + sum_k [ wlog*ln(tau_k + rho_k) + lin_k*tau_k ]
//                    + logsum_weight * sum_l ln(1 + d_l*<B_l, X>)
//   s.t.      a_scale*<A_k, X> + a_offset <= tau_k          (k = 1..K)
//             sum_l ln(1 + d_l*<B_l, X>) >= logsum_req      (if constrained)
//             tr X = trace_budget,  X >= 0.
//
// All matrices must be Hermitian; A_k and B_l PSD. Solved with a primal
// log-barrier path following scheme. The Newton system over the matrix
// block is inverted in closed form (X * R * X) and the low-rank coupling
// through the scalar functionals is eliminated via a small dense system,
// so one Newton step costs O((K + L) * n^3).
struct Problem {
  int n = 0;
  double trace_budget = 1.0;
  MatC c;                    // empty = no linear term
  std::vector<MatC> a_mats;  // coupling matrices for the tau constraints
  double a_scale = 1.0;
  double a_offset = 0.0;
  VecR rho;                  // per-tau log shift
  VecR lin;                  // per-tau linear coefficient (expected <= 0)
  double wlog = 0.0;         // weight of ln(tau + rho)
  std::vector<MatC> b_mats;  // coupling matrices for the log-sum
  VecR d;                    // per-term coefficient in the log-sum
  bool has_logsum_constraint = false;
  double logsum_req = 0.0;
  double logsum_weight = 0.0;

  int n_tau() const { return static_cast<int>(a_mats.size()); }
  int n_logsum() const { return static_cast<int>(b_mats.size()); }
  double barrier_degree() const {
    return n + n_tau() + (has_logsum_constraint ? 1 : 0);
  }
};

struct Options {
  double gap_tol = 1e-9;        // relative duality-gap target
  double t0 = 1.0;              // initial barrier weight
  double mu = 8.0;              // barrier growth factor
  int max_newton = 4000;        // total Newton-step budget
  int max_center = 80;          // Newton steps per centering stage
  double center_tol = 1e-10;    // decrement^2/2 threshold
  // feasibility probing: stop early once the log-sum exceeds this value
  double early_stop_logsum = std::numeric_limits<double>::infinity();
  // certify infeasibility against this requirement (phase-one use)
  double certify_req = -std::numeric_limits<double>::infinity();
};

enum class Status { optimal, infeasible, max_iterations, early_feasible };

struct Result {
  MatC x;
  VecR tau;
  double objective = 0.0;
  double logsum_value = 0.0;
  Status status = Status::optimal;
  int newton_steps = 0;
  double gap_bound = std::numeric_limits<double>::infinity();
  double trace_residual = 0.0;
  double min_slack = std::numeric_limits<double>::infinity();
};

namespace detail {

inline double inner(const MatC& p, const MatC& q) {
  return (p.array() * q.array().conjugate()).sum().real();
}

inline bool is_pd(const MatC& x) {
  Eigen::LLT<MatC> llt(x);
  return llt.info() == Eigen::Success;
}

struct Eval {
  VecR y, z, h;
  double ulsum = 0.0;  // sum_l ln(1 + d_l z_l)
  double slack_g = 0.0;
  bool feasible = false;
};

inline Eval evaluate(const Problem& pb, const MatC& x, const VecR& tau) {
  Eval e;
  const int kk = pb.n_tau(), ll = pb.n_logsum();
  e.y.resize(kk);
  e.h.resize(kk);
  for (int k = 0; k < kk; ++k) {
    e.y[k] = inner(pb.a_mats[k], x);
    e.h[k] = tau[k] - pb.a_scale * e.y[k] - pb.a_offset;
  }
  e.z.resize(ll);
  for (int l = 0; l < ll; ++l) {
    e.z[l] = inner(pb.b_mats[l], x);
    e.ulsum += std::log1p(pb.d[l] * e.z[l]);
  }
  e.slack_g = e.ulsum - pb.logsum_req;
  e.feasible = true;
  for (int k = 0; k < kk; ++k)
    if (!(e.h[k] > 0.0)) e.feasible = false;
  if (pb.has_logsum_constraint && !(e.slack_g > 0.0)) e.feasible = false;
  for (int k = 0; k < kk; ++k)
    if (!(tau[k] + pb.rho[k] > 0.0)) e.feasible = false;
  return e;
}

inline double objective(const Problem& pb, const MatC& x, const VecR& tau, const Eval& e) {
  double f = pb.logsum_weight * e.ulsum;
  if (pb.c.size() > 0) f += inner(pb.c, x);
  for (int k = 0; k < pb.n_tau(); ++k)
    f += pb.wlog * std::log(tau[k] + pb.rho[k]) + pb.lin[k] * tau[k];
  return f;
}

inline double barrier_phi(const Problem& pb, double t, const MatC& x, const VecR& tau,
                          const Eval& e) {
  Eigen::LLT<MatC> llt(x);
  if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
  double logdet = 0.0;
  for (int i = 0; i < pb.n; ++i) logdet += 2.0 * std::log(llt.matrixL()(i, i).real());
  double phi = -t * objective(pb, x, tau, e) - logdet;
  for (int k = 0; k < pb.n_tau(); ++k) phi -= std::log(e.h[k]);
  if (pb.has_logsum_constraint) phi -= std::log(e.slack_g);
  return phi;
}

}  // namespace detail

// Barrier solve from a strictly feasible start. tau entries are lifted
// automatically to clear their slack constraints; X itself must be PD and
// satisfy the log-sum constraint strictly when one is present.
inline Result solve(const Problem& pb, const MatC& x0, VecR tau0, const Options& opts = {}) {
  using detail::inner;
  const int n = pb.n;
  const int kk = pb.n_tau(), ll = pb.n_logsum();
  const double nu = pb.barrier_degree();

  MatC x = (x0 + x0.adjoint()) * 0.5;
  if (!detail::is_pd(x)) throw numerical_error("sdp::solve: start is not positive definite");
  if (tau0.size() != kk) tau0 = VecR::Zero(kk);
  VecR tau = tau0;
  {
    auto e = detail::evaluate(pb, x, tau);
    for (int k = 0; k < kk; ++k) {
      const double floor_k = pb.a_scale * e.y[k] + pb.a_offset;
      const double lift = std::abs(floor_k) * 0.05 + 1e-8;
      if (!(tau[k] > floor_k + 1e-12)) tau[k] = floor_k + lift;
      if (!(tau[k] + pb.rho[k] > 0.0)) tau[k] = -pb.rho[k] + lift;
    }
    e = detail::evaluate(pb, x, tau);
    if (pb.has_logsum_constraint && !(e.slack_g > 0.0))
      throw numerical_error("sdp::solve: start violates the log-sum constraint");
  }

  Result res;
  res.status = Status::max_iterations;
  double t = opts.t0;
  int total_newton = 0;

  const MatC id = MatC::Identity(n, n);
  while (true) {
    // one centering stage at barrier weight t
    for (int it = 0; it < opts.max_center; ++it) {
      if (total_newton >= opts.max_newton) break;
      ++total_newton;
      auto e = detail::evaluate(pb, x, tau);

      if (e.ulsum > opts.early_stop_logsum) {
        res.status = Status::early_feasible;
        goto done;
      }

      Eigen::LLT<MatC> llt(x);
      if (llt.info() != Eigen::Success) throw numerical_error("sdp::solve: lost positive definiteness");
      MatC xinv = llt.solve(id);
      xinv = (xinv + xinv.adjoint()) * 0.5;

      // gradient in the matrix block
      MatC gx = -xinv;
      if (pb.c.size() > 0) gx -= t * pb.c;
      for (int k = 0; k < kk; ++k) gx += (pb.a_scale / e.h[k]) * pb.a_mats[k];
      MatC gm;  // gradient of the log-sum w.r.t. X
      if (ll > 0) {
        gm = MatC::Zero(n, n);
        for (int l = 0; l < ll; ++l) gm += (pb.d[l] / (1.0 + pb.d[l] * e.z[l])) * pb.b_mats[l];
        if (pb.logsum_weight != 0.0) gx -= t * pb.logsum_weight * gm;
        if (pb.has_logsum_constraint) gx -= gm / e.slack_g;
      }
      const MatC rx = -gx;

      // low-rank Hessian terms: sigma_a * <M_a, U> * M_a
      std::vector<const MatC*> ms;
      std::vector<double> sig;
      ms.reserve(kk + ll + 1);
      for (int k = 0; k < kk; ++k) {
        ms.push_back(&pb.a_mats[k]);
        sig.push_back(pb.a_scale * pb.a_scale / (e.h[k] * e.h[k]));
      }
      for (int l = 0; l < ll; ++l) {
        const double c2 = pb.d[l] * pb.d[l] / std::pow(1.0 + pb.d[l] * e.z[l], 2);
        const double w = c2 * (t * pb.logsum_weight +
                               (pb.has_logsum_constraint ? 1.0 / e.slack_g : 0.0));
        ms.push_back(&pb.b_mats[l]);
        sig.push_back(w);
      }
      if (pb.has_logsum_constraint) {
        ms.push_back(&gm);
        sig.push_back(1.0 / (e.slack_g * e.slack_g));
      }
      const int q = static_cast<int>(ms.size());

      VecR rt(kk), htt(kk);
      for (int k = 0; k < kk; ++k) {
        const double gt = -t * (pb.wlog / (tau[k] + pb.rho[k]) + pb.lin[k]) - 1.0 / e.h[k];
        rt[k] = -gt;
        htt[k] = t * pb.wlog / std::pow(tau[k] + pb.rho[k], 2) + 1.0 / (e.h[k] * e.h[k]);
      }

      // scaled matrices T(P) = X P X
      std::vector<MatC> tm(q);
      for (int a = 0; a < q; ++a) tm[a] = x * (*ms[a]) * x;
      std::vector<MatC> tn(kk);
      for (int k = 0; k < kk; ++k) tn[k] = (-pb.a_scale / (e.h[k] * e.h[k])) * tm[k];
      const MatC ti = x * x;
      const MatC tr_ = x * rx * x;
      auto nmat = [&](int k) { return (-pb.a_scale / (e.h[k] * e.h[k])) * (*ms[k]); };

      // small dense system over (u_a, dtau_k, lambda)
      const int dim = q + kk + 1;
      MatR s(dim, dim);
      VecR rhs(dim);
      const double r_eq = pb.trace_budget - x.trace().real();
      for (int a = 0; a < q; ++a) {
        rhs[a] = inner(*ms[a], tr_);
        for (int b = 0; b < q; ++b) s(a, b) = sig[b] * inner(*ms[a], tm[b]);
        for (int k = 0; k < kk; ++k) s(a, q + k) = inner(*ms[a], tn[k]);
        s(a, q + kk) = inner(*ms[a], ti);
        s(a, a) += 1.0;
      }
      for (int k = 0; k < kk; ++k) {
        const int row = q + k;
        const MatC nk = nmat(k);
        rhs[row] = rt[k] - inner(nk, tr_);
        for (int b = 0; b < q; ++b) s(row, b) = -sig[b] * inner(nk, tm[b]);
        for (int j = 0; j < kk; ++j) s(row, q + j) = -inner(nk, tn[j]);
        s(row, q + k) += htt[k];
        s(row, q + kk) = -inner(nk, ti);
      }
      {
        const int row = q + kk;
        rhs[row] = r_eq - tr_.trace().real();
        for (int b = 0; b < q; ++b) s(row, b) = -sig[b] * tm[b].trace().real();
        for (int k = 0; k < kk; ++k) s(row, q + k) = -tn[k].trace().real();
        s(row, q + kk) = -ti.trace().real();
      }
      Eigen::CompleteOrthogonalDecomposition<MatR> cod(s);
      const VecR sol = cod.solve(rhs);

      MatC u = tr_;
      for (int a = 0; a < q; ++a) u -= sig[a] * sol[a] * tm[a];
      for (int k = 0; k < kk; ++k) u -= sol[q + k] * tn[k];
      u -= sol[q + kk] * ti;
      u = (u + u.adjoint()) * 0.5;
      // keep the trace equality exact even when the small system is degenerate
      u += ((r_eq - u.trace().real()) / n) * id;
      const VecR dtau = sol.segment(q, kk);

      const double dec2 = inner(rx, u) + rt.dot(dtau);
      if (!(dec2 > opts.center_tol * 2.0)) break;

      // backtrack to strict feasibility, then Armijo on the barrier value
      const double phi0 = detail::barrier_phi(pb, t, x, tau, e);
      double step = 1.0;
      bool moved = false;
      for (int ls = 0; ls < 70; ++ls) {
        const MatC xn = x + step * u;
        const VecR taun = tau + step * dtau;
        const auto en = detail::evaluate(pb, xn, taun);
        if (en.feasible && detail::is_pd(xn)) {
          const double phin = detail::barrier_phi(pb, t, xn, taun, en);
          if (phin <= phi0 - 0.01 * step * dec2) {
            x = (xn + xn.adjoint()) * 0.5;
            tau = taun;
            moved = true;
            break;
          }
        }
        step *= 0.6;
      }
      if (!moved) break;
    }

    const auto e = detail::evaluate(pb, x, tau);
    const double f = detail::objective(pb, x, tau, e);
    // infeasibility certificate: even the barrier-optimal log-sum cannot
    // reach the requirement (2x margin covers approximate centering)
    if (e.ulsum + 2.0 * nu / t < opts.certify_req) {
      res.status = Status::infeasible;
      break;
    }
    if (nu / t < opts.gap_tol * std::max(1.0, std::abs(f))) {
      res.status = Status::optimal;
      break;
    }
    if (total_newton >= opts.max_newton) {
      res.status = Status::max_iterations;
      break;
    }
    t *= opts.mu;
  }

done:
  const auto e = detail::evaluate(pb, x, tau);
  res.x = x;
  res.tau = tau;
  res.objective = detail::objective(pb, x, tau, e);
  res.logsum_value = e.ulsum;
  res.newton_steps = total_newton;
  res.gap_bound = nu / t;
  res.trace_residual = std::abs(x.trace().real() - pb.trace_budget);
  res.min_slack = e.h.size() ? e.h.minCoeff() : std::numeric_limits<double>::infinity();
  return res;
}

// max <C, X> s.t. tr X = budget, X >= 0.
inline Result solve_linear(const MatC& c, double trace_budget, const Options& opts = {}) {
  Problem pb;
  pb.n = static_cast<int>(c.rows());
  pb.trace_budget = trace_budget;
  pb.c = (c + c.adjoint()) * 0.5;
  const MatC x0 = MatC::Identity(pb.n, pb.n) * (trace_budget / pb.n);
  return solve(pb, x0, VecR(), opts);
}

// Maximize the log-sum functional alone over the spectrahedron (feasibility
// phase). Stops early once `required` is strictly exceeded, or certifies
// that it cannot be reached.
inline Result max_logsum(const std::vector<MatC>& b_mats, const VecR& d, double trace_budget,
                         double required, const Options& base_opts = {}) {
  Problem pb;
  pb.n = static_cast<int>(b_mats[0].rows());
  pb.trace_budget = trace_budget;
  pb.b_mats = b_mats;
  pb.d = d;
  pb.logsum_weight = 1.0;
  Options opts = base_opts;
  opts.early_stop_logsum = required + std::max(1e-9, 1e-6 * std::abs(required));
  opts.certify_req = required;
  const MatC x0 = MatC::Identity(pb.n, pb.n) * (trace_budget / pb.n);
  return solve(pb, x0, VecR(), opts);
}

}  // namespace fdhap::sdp
