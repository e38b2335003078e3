#pragma once

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <optional>
#include <vector>

#include "fdhap/beamforming.hpp"
#include "fdhap/channel.hpp"
#include "fdhap/rng.hpp"
#include "fdhap/sdp.hpp"
#include "fdhap/types.hpp"

namespace fdhap {

// Which time-split factor multiplies the uplink-constraint coefficient.
// `as_printed` keeps the extra alpha/(1-alpha) on top of the kappa already
// inside c_k; `kappa_consistent` uses c_k alone.
enum class UplinkTimeFactor { as_printed, kappa_consistent };

struct OptimizerOptions {
  double sca_tol = 1e-4;              // relative objective change
  int sca_max_iter = 50;
  double rank_one_threshold = 1e-6;   // lambda2/lambda1 below this = rank one
  int randomization_candidates = 500;
  UplinkTimeFactor time_factor = UplinkTimeFactor::as_printed;
  sdp::Options solver;                // subproblem solver settings
};

// Lifted energy-beamformer design problem for one time split. The PSD
// variable is vec(W_E) vec(W_E)^H with column-major vectorization, so the
// coupling matrices are block diagonal: I_{k_ul} (x) (n_tx x n_tx) blocks.
struct SdrProblem {
  int n_tx = 0, k_ul = 0, k_dl = 0;
  std::vector<MatC> a_mats;  // per user: sensor->user interference quadratic form
  std::vector<MatC> b_mats;  // per sensor: harvested-power quadratic form
  VecR c_coeffs;             // per sensor uplink coefficient c_k
  VecR gains;                // per user ||g_ap_dl,k||^2
  double alpha = 0.0, r_ul_min = 0.0, trace_budget = 0.0;
  double sigma_n2 = 1.0, eta = 0.5, p_ap = 1.0;
  UplinkTimeFactor time_factor = UplinkTimeFactor::as_printed;

  int dim() const { return n_tx * k_ul; }
  double s() const { return eta * p_ap * alpha / (1.0 - alpha); }
  VecR d() const {
    if (time_factor == UplinkTimeFactor::as_printed)
      return c_coeffs * (alpha / (1.0 - alpha));
    return c_coeffs;
  }
  bool has_ul_constraint() const { return r_ul_min > 0.0; }
  double logsum_req() const { return r_ul_min * kLn2 / (1.0 - alpha); }
};

namespace opt_detail {

inline MatC block_diag_kron(int copies, const MatC& block) {
  const int m = static_cast<int>(block.rows());
  MatC out = MatC::Zero(copies * m, copies * m);
  for (int c = 0; c < copies; ++c) out.block(c * m, c * m, m, m) = block;
  return out;
}

inline VecC vectorize(const MatC& w) { return Eigen::Map<const VecC>(w.data(), w.size()); }

inline MatC devectorize(const VecC& v, int rows, int cols) {
  return Eigen::Map<const MatC>(v.data(), rows, cols);
}

}  // namespace opt_detail

inline SdrProblem build_sdr_problem(const ChannelRealization& ch, const SystemParams& p,
                                    const PathLossProfile& losses, double alpha,
                                    UplinkTimeFactor time_factor = UplinkTimeFactor::as_printed,
                                    const ChannelEstimate* estimate = nullptr) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("build_sdr_problem: alpha must lie in [0,1)");
  SdrProblem pr;
  pr.n_tx = p.n_tx;
  pr.k_ul = p.k_ul;
  pr.k_dl = p.k_dl;
  pr.alpha = alpha;
  pr.r_ul_min = p.r_ul_min;
  pr.trace_budget = p.k_ul;
  pr.sigma_n2 = p.sigma_n2;
  pr.eta = p.eta;
  pr.p_ap = p.p_ap;
  pr.time_factor = time_factor;

  const double kap = kappa(p.eta, alpha);
  pr.a_mats.reserve(p.k_dl);
  for (int k = 0; k < p.k_dl; ++k) {
    // stacked rows |g_ul_dl(l,k)| * g_ap_ul,l^T: the exact quadratic form of
    // the harvested-interference seen by user k
    MatC ht(p.k_ul, p.n_tx);
    for (int l = 0; l < p.k_ul; ++l)
      ht.row(l) = std::abs(ch.g_ul_dl(l, k)) * ch.g_ap_ul.col(l).transpose();
    MatC gram = ht.adjoint() * ht;
    gram = (gram + gram.adjoint()) * 0.5;
    pr.a_mats.push_back(opt_detail::block_diag_kron(p.k_ul, gram));
  }
  pr.b_mats.reserve(p.k_ul);
  pr.c_coeffs.resize(p.k_ul);
  for (int l = 0; l < p.k_ul; ++l) {
    const double beta = losses.beta_ap_ul[l];
    const VecC h = ch.g_ap_ul.col(l) / std::sqrt(beta);
    MatC outer = h.conjugate() * h.transpose();
    outer = (outer + outer.adjoint()) * 0.5;
    pr.b_mats.push_back(opt_detail::block_diag_kron(p.k_ul, outer));
    pr.c_coeffs[l] =
        kap * p.p_ap * beta * ch.g_ap_ul.col(l).squaredNorm() / (p.p_ap * p.sigma_si2 + p.sigma_n2);
  }
  pr.gains.resize(p.k_dl);
  const MatC& gd = estimate ? estimate->g_ap_dl_hat : ch.g_ap_dl;
  for (int k = 0; k < p.k_dl; ++k) pr.gains[k] = gd.col(k).squaredNorm();
  return pr;
}

// Interference levels y_k = <A_k, X> (or the rank-one quadratic forms).
inline VecR interference_levels(const SdrProblem& pr, const MatC& x) {
  VecR y(pr.k_dl);
  for (int k = 0; k < pr.k_dl; ++k) y[k] = sdp::detail::inner(pr.a_mats[k], x);
  return y;
}

inline VecR interference_levels(const SdrProblem& pr, const VecC& v) {
  VecR y(pr.k_dl);
  for (int k = 0; k < pr.k_dl; ++k) y[k] = (v.adjoint() * pr.a_mats[k] * v)(0).real();
  return y;
}

// Large-array downlink objective at given interference levels.
inline double dl_objective(const SdrProblem& pr, const VecR& y) {
  double sum = 0.0;
  for (int k = 0; k < pr.k_dl; ++k)
    sum += log2_1p(pr.p_ap * pr.gains[k] / (pr.s() * y[k] + pr.sigma_n2));
  return (1.0 - pr.alpha) * sum;
}

inline double ul_logsum(const SdrProblem& pr, const MatC& x) {
  const VecR d = pr.d();
  double sum = 0.0;
  for (int l = 0; l < pr.k_ul; ++l) sum += std::log1p(d[l] * sdp::detail::inner(pr.b_mats[l], x));
  return sum;
}

inline double ul_logsum(const SdrProblem& pr, const VecC& v) {
  const VecR d = pr.d();
  double sum = 0.0;
  for (int l = 0; l < pr.k_ul; ++l)
    sum += std::log1p(d[l] * (v.adjoint() * pr.b_mats[l] * v)(0).real());
  return sum;
}

// Uplink sum rate implied by the constraint surface, in bits/s/Hz.
inline double ul_rate_from_logsum(const SdrProblem& pr, double logsum) {
  return (1.0 - pr.alpha) * logsum / kLn2;
}

// One linearization point of the concave-minus-convex objective split.
struct ScaState {
  VecR tau_bar;               // linearization point (interference + noise)
  MatC w_bar;                 // current lifted beamformer
  double objective = 0.0;     // true objective at w_bar
  int iteration = 0;
  std::vector<double> trace;  // per-iteration true objectives
};

namespace opt_detail {

inline sdp::Problem to_subproblem(const SdrProblem& pr, const VecR& tau_bar) {
  sdp::Problem sp;
  sp.n = pr.dim();
  sp.trace_budget = pr.trace_budget;
  sp.a_mats = pr.a_mats;
  sp.a_scale = pr.s();
  sp.a_offset = pr.sigma_n2;
  sp.rho.resize(pr.k_dl);
  sp.lin.resize(pr.k_dl);
  for (int k = 0; k < pr.k_dl; ++k) {
    sp.rho[k] = pr.p_ap * pr.gains[k];
    sp.lin[k] = -1.0 / (tau_bar[k] * kLn2);
  }
  sp.wlog = 1.0 / kLn2;
  sp.b_mats = pr.b_mats;
  sp.d = pr.d();
  if (pr.has_ul_constraint()) {
    sp.has_logsum_constraint = true;
    sp.logsum_req = pr.logsum_req();
  }
  return sp;
}

}  // namespace opt_detail

// Initial state anchored at a strictly feasible lifted beamformer. The
// linearization point is the interference level actually seen there, which
// makes the first surrogate touch the true objective.
inline ScaState sca_initial_state(const SdrProblem& pr, const MatC& x_start) {
  ScaState st;
  st.w_bar = x_start;
  const VecR y = interference_levels(pr, x_start);
  st.tau_bar = pr.s() * y + VecR::Constant(pr.k_dl, pr.sigma_n2);
  st.objective = dl_objective(pr, y);
  st.trace.push_back(st.objective);
  return st;
}

// Majorize-maximize loop: each subproblem solution can only improve the true
// objective, so iterates are adopted only while they improve and the loop
// stops at the first non-improving solve.
inline ScaState sca_iterate(const SdrProblem& pr, ScaState state, double tol, int max_iter,
                            const sdp::Options& solver_opts = {}) {
  for (int it = 0; it < max_iter; ++it) {
    const sdp::Problem sp = opt_detail::to_subproblem(pr, state.tau_bar);
    const auto res = sdp::solve(sp, state.w_bar, VecR(), solver_opts);
    if (res.status == sdp::Status::infeasible)
      throw numerical_error("sca_iterate: subproblem reported infeasible from a feasible state");
    const VecR y = interference_levels(pr, res.x);
    const VecR tau_eff = pr.s() * y + VecR::Constant(pr.k_dl, pr.sigma_n2);
    const double obj = dl_objective(pr, y);
    const double floor_eps = 1e-9 * (1.0 + std::abs(state.objective));
    if (!(obj > state.objective + floor_eps)) break;  // converged to solver accuracy
    const double improvement = obj - state.objective;
    state.w_bar = res.x;
    state.tau_bar = tau_eff;
    state.objective = obj;
    state.iteration += 1;
    state.trace.push_back(obj);
    if (improvement < tol * std::max(1.0, std::abs(obj))) break;
  }
  return state;
}

enum class RecoveryStatus { rank_one, randomized, failed };

struct RankOneRecovery {
  MatC w_e;                 // n_tx x k_ul beamformer
  VecC v;                   // lifted vector, ||v||^2 = k_ul
  RecoveryStatus status = RecoveryStatus::failed;
  double objective = 0.0;   // downlink objective at the recovered beam
  double ul_logsum = 0.0;
  double rank_one_gap = 0.0;
};

// Principal-eigenvector extraction with Gaussian randomization fallback.
// Candidates are drawn with covariance w_bar and rescaled onto the power
// budget; the best uplink-feasible candidate wins.
inline RankOneRecovery recover_rank_one(const MatC& w_bar, const SdrProblem& pr, Rng& rng,
                                        const OptimizerOptions& opts = {}) {
  RankOneRecovery out;
  const int n = static_cast<int>(w_bar.rows());
  Eigen::SelfAdjointEigenSolver<MatC> eig(w_bar);
  if (eig.info() != Eigen::Success) throw numerical_error("recover_rank_one: eigensolver failed");
  const VecR ev = eig.eigenvalues().cwiseMax(0.0);
  const double l1 = ev[n - 1];
  if (!(l1 > 0.0)) throw numerical_error("recover_rank_one: matrix is numerically zero");
  out.rank_one_gap = (n >= 2) ? ev[n - 2] / l1 : 0.0;

  const double target_norm = std::sqrt(pr.trace_budget);
  const double req = pr.has_ul_constraint() ? pr.logsum_req() : -std::numeric_limits<double>::infinity();
  const double req_slack = req - 1e-9 * (1.0 + std::abs(req));

  auto consider = [&](const VecC& cand, bool randomized) {
    VecC v = cand * (target_norm / cand.norm());
    const double logsum = fdhap::ul_logsum(pr, v);
    if (logsum < req_slack) return;
    const double obj = dl_objective(pr, interference_levels(pr, v));
    if (out.status == RecoveryStatus::failed || obj > out.objective) {
      out.v = v;
      out.objective = obj;
      out.ul_logsum = logsum;
      out.status = randomized ? RecoveryStatus::randomized : RecoveryStatus::rank_one;
    }
  };

  const VecC principal = eig.eigenvectors().col(n - 1);
  consider(principal, false);
  const bool is_rank_one = out.rank_one_gap < opts.rank_one_threshold;
  if (!(is_rank_one && out.status == RecoveryStatus::rank_one)) {
    const MatC half = eig.eigenvectors() * ev.cwiseSqrt().asDiagonal();
    for (int c = 0; c < opts.randomization_candidates; ++c) {
      VecC xi(n);
      for (int i = 0; i < n; ++i) xi[i] = rng.cgaussian(1.0);
      consider(half * xi, true);
    }
  }
  if (out.status != RecoveryStatus::failed)
    out.w_e = opt_detail::devectorize(out.v, pr.n_tx, pr.k_ul);
  return out;
}

enum class OptimizeStatus { optimal, rank_approximated, infeasible };

struct OptimizationResult {
  MatC w_e;                        // recovered energy beamformer
  double alpha_star = 0.0;
  double dl_sum_rate = 0.0;        // at the recovered beam, large-array surface
  double ul_sum_rate = 0.0;
  double sdr_dl_sum_rate = 0.0;    // relaxation value at alpha_star (upper bound)
  double sdr_ul_sum_rate = 0.0;
  std::vector<double> sca_trace;   // per-iteration objectives at alpha_star
  double rank_one_gap = 0.0;
  OptimizeStatus status = OptimizeStatus::infeasible;
  int alpha_points_feasible = 0;
  int newton_steps = 0;
};

namespace opt_detail {

struct AlphaOutcome {
  bool feasible = false;
  double alpha = 0.0;
  ScaState state;
  RankOneRecovery recovery;
  double sdr_ul_logsum = 0.0;
};

// Strictly feasible interior start: the matched energy beam blended with a
// sliver of identity, or a feasibility solve when the blend violates the
// uplink floor.
inline std::optional<MatC> feasible_start(const SdrProblem& pr, const MatC& w_mrt,
                                          const sdp::Options& solver_opts, int* newton_steps) {
  const int n = pr.dim();
  const VecC v = vectorize(w_mrt);
  const MatC lifted = v * v.adjoint();
  const MatC center = MatC::Identity(n, n) * (pr.trace_budget / n);
  const MatC blend = 0.98 * lifted + 0.02 * center;
  if (!pr.has_ul_constraint()) return blend;
  const double req = pr.logsum_req();
  if (ul_logsum(pr, blend) > req + 1e-7 * (1.0 + std::abs(req))) return blend;
  auto ph1 = sdp::max_logsum(pr.b_mats, pr.d(), pr.trace_budget, req, solver_opts);
  if (newton_steps) *newton_steps += ph1.newton_steps;
  if (ph1.status == sdp::Status::early_feasible ||
      (ph1.status == sdp::Status::optimal && ph1.logsum_value > req))
    return ph1.x;
  return std::nullopt;
}

}  // namespace opt_detail

// Energy-beamformer and time-split design: for every grid point the SCA loop
// maximizes the relaxed downlink objective under the uplink floor, a rank-one
// beam is recovered, and the best recovered point wins.
inline OptimizationResult optimize(const ChannelRealization& ch, const SystemParams& p,
                                   const PathLossProfile& losses, std::vector<double> alpha_grid,
                                   double r_ul_min, Rng& rng, const OptimizerOptions& opts = {},
                                   const ChannelEstimate* estimate = nullptr) {
  if (alpha_grid.empty()) {
    alpha_grid.reserve(99);
    for (int i = 1; i <= 99; ++i) alpha_grid.push_back(0.01 * i);
  }
  for (double a : alpha_grid)
    if (!(a >= 0.0 && a < 1.0)) throw config_error("optimize: alpha grid entries must lie in [0, 1)");

  OptimizationResult result;
  std::optional<opt_detail::AlphaOutcome> best;
  std::optional<opt_detail::AlphaOutcome> best_sdr;  // fallback if recovery fails everywhere

  SystemParams pk = p;
  pk.r_ul_min = r_ul_min;
  const MatC w_mrt = mrt_energy_beams(ch.g_ap_ul);
  for (const double alpha : alpha_grid) {
    if (alpha == 0.0) continue;  // no harvesting, no uplink power
    SdrProblem pr = build_sdr_problem(ch, pk, losses, alpha, opts.time_factor, estimate);
    const auto start = opt_detail::feasible_start(pr, w_mrt, opts.solver, &result.newton_steps);
    if (!start) continue;
    ScaState st = sca_initial_state(pr, *start);
    st = sca_iterate(pr, st, opts.sca_tol, opts.sca_max_iter, opts.solver);
    opt_detail::AlphaOutcome oc;
    oc.feasible = true;
    oc.alpha = alpha;
    oc.sdr_ul_logsum = ul_logsum(pr, st.w_bar);
    oc.recovery = recover_rank_one(st.w_bar, pr, rng, opts);
    oc.state = std::move(st);
    ++result.alpha_points_feasible;
    if (!best_sdr || oc.state.objective > best_sdr->state.objective) best_sdr = oc;
    if (oc.recovery.status != RecoveryStatus::failed &&
        (!best || oc.recovery.objective > best->recovery.objective))
      best = std::move(oc);
  }

  if (!best) {
    result.status = OptimizeStatus::infeasible;
    return result;
  }
  const auto& win = *best;
  SdrProblem pr = build_sdr_problem(ch, pk, losses, win.alpha, opts.time_factor, estimate);
  result.w_e = win.recovery.w_e;
  result.alpha_star = win.alpha;
  result.dl_sum_rate = win.recovery.objective;
  result.ul_sum_rate = ul_rate_from_logsum(pr, win.recovery.ul_logsum);
  result.sdr_dl_sum_rate = win.state.objective;
  result.sdr_ul_sum_rate = ul_rate_from_logsum(pr, win.sdr_ul_logsum);
  result.sca_trace = win.state.trace;
  result.rank_one_gap = win.recovery.rank_one_gap;
  result.status = win.recovery.status == RecoveryStatus::rank_one ? OptimizeStatus::optimal
                                                                  : OptimizeStatus::rank_approximated;
  return result;
}

}  // namespace fdhap
