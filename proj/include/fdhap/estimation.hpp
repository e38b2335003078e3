#pragma once

#include <Eigen/Cholesky>

#include "fdhap/channel.hpp"
#include "fdhap/training.hpp"
#include "fdhap/types.hpp"

namespace fdhap {

// Stacked user/SI channel H = [g_ap_dl, h_si] with its training signal
// matrix and prior per-column variances.
struct CombinedChannel {
  MatC h_bar;   // n_rx x (k_dl + n_tx)
  MatC x_p;     // (k_dl + n_tx) x tau
  VecR c_hbar;  // diagonal of the prior covariance, length k_dl + n_tx
};

// MMSE estimate of the combined channel, split back into blocks, with the
// estimate/error decomposition g = g_hat + e.
struct ChannelEstimate {
  MatC g_ap_dl_hat;
  MatC e_ap_dl;
  MatC h_si_hat;
  MatC e_si;
  VecR var_g_hat;          // per-column estimate variance for g_ap_dl_hat
  double var_si_hat = 0.0; // per-entry estimate variance for h_si_hat
};

// Closed-form per-entry estimate variances of the MMSE decomposition.
// Estimate: tau*P*beta^2 / (1 + tau*P*beta); error: beta - estimate.
struct EstimateVariances {
  VecR g_hat;    // per user column
  VecR g_err;
  double si_hat = 0.0;
  double si_err = 0.0;
};

inline EstimateVariances estimate_variances(const SystemParams& p, const PathLossProfile& losses) {
  EstimateVariances v;
  const double tau = static_cast<double>(p.tau_effective());
  v.g_hat.resize(p.k_dl);
  v.g_err.resize(p.k_dl);
  for (int k = 0; k < p.k_dl; ++k) {
    const double b = losses.beta_ap_dl[k];
    const double tp = tau * p.p_dl;
    v.g_hat[k] = tp * b * b / (1.0 + tp * b);
    v.g_err[k] = b - v.g_hat[k];
  }
  const double tpa = tau * p.p_ap;
  const double s2 = p.sigma_si2;
  v.si_hat = tpa * s2 * s2 / (1.0 + tpa * s2);
  v.si_err = s2 - v.si_hat;
  return v;
}

// Assembles the combined channel and its signal matrix. The SI block of x_p
// carries per-row energy tau * p_ap, matching the closed-form variances.
inline CombinedChannel make_combined_channel(const ChannelRealization& ch, const TrainingDesign& d,
                                             const SystemParams& p, const PathLossProfile& losses) {
  CombinedChannel cc;
  const int m = p.k_dl + p.n_tx;
  cc.h_bar.resize(p.n_rx, m);
  cc.h_bar.leftCols(p.k_dl) = ch.g_ap_dl;
  cc.h_bar.rightCols(p.n_tx) = ch.h_si;
  cc.x_p.resize(m, d.pilots.cols());
  cc.x_p.topRows(p.k_dl) = std::sqrt(d.p_pilot) * d.pilots;
  cc.x_p.bottomRows(p.n_tx) = std::sqrt(p.p_ap) * d.energy_seq;
  cc.c_hbar.resize(m);
  cc.c_hbar.head(p.k_dl) = losses.beta_ap_dl;
  cc.c_hbar.tail(p.n_tx).setConstant(p.sigma_si2);
  return cc;
}

// Training-phase observation Y = H_bar * X_p + N.
inline MatC simulate_training_rx(const CombinedChannel& cc, const SystemParams& p, Rng& rng) {
  MatC noise(p.n_rx, cc.x_p.cols());
  for (Eigen::Index c = 0; c < noise.cols(); ++c)
    for (Eigen::Index r = 0; r < noise.rows(); ++r) noise(r, c) = rng.cgaussian(p.sigma_n2);
  return cc.h_bar * cc.x_p + noise;
}

// Linear MMSE: H_hat = Y * (X^H C X + I)^-1 * X^H C, via a Cholesky solve of
// the tau x tau normal matrix. The error matrices are truth minus estimate.
inline ChannelEstimate mmse_estimate(const MatC& obs, const TrainingDesign& design,
                                     const CombinedChannel& cc, const SystemParams& p,
                                     const PathLossProfile& losses) {
  const Eigen::Index tau = cc.x_p.cols();
  if (obs.rows() != p.n_rx || obs.cols() != tau)
    throw config_error("mmse_estimate: observation shape mismatch");

  const MatC xc = cc.x_p.adjoint() * cc.c_hbar.asDiagonal().toDenseMatrix().cast<Cplx>();  // tau x m
  MatC normal = xc * cc.x_p;  // X^H C X
  normal += MatC::Identity(tau, tau);
  normal = (normal + normal.adjoint()) * 0.5;

  Eigen::LLT<MatC> llt(normal);
  if (llt.info() != Eigen::Success)
    throw numerical_error("mmse_estimate: normal matrix factorization failed");
  const double cond_proxy = normal.diagonal().real().maxCoeff() / normal.diagonal().real().minCoeff();
  if (!std::isfinite(cond_proxy) || cond_proxy > 1e15) {
    std::ostringstream msg;
    msg << "mmse_estimate: normal matrix badly conditioned (diagonal ratio " << cond_proxy << ")";
    throw numerical_error(msg.str());
  }

  const MatC filt = llt.solve(xc);          // (X^H C X + I)^-1 X^H C
  const MatC h_hat = obs * filt;            // n_rx x m

  ChannelEstimate est;
  est.g_ap_dl_hat = h_hat.leftCols(p.k_dl);
  est.h_si_hat = h_hat.rightCols(p.n_tx);
  est.e_ap_dl = cc.h_bar.leftCols(p.k_dl) - est.g_ap_dl_hat;
  est.e_si = cc.h_bar.rightCols(p.n_tx) - est.h_si_hat;
  const auto vars = estimate_variances(p, losses);
  est.var_g_hat = vars.g_hat;
  est.var_si_hat = vars.si_hat;
  return est;
}

// Draws a channel realization jointly with its MMSE estimate directly from
// the estimate/error decomposition, bypassing the per-trial linear solve.
// The joint law matches draw_channels + simulate_training_rx + mmse_estimate.
inline std::pair<ChannelRealization, ChannelEstimate> draw_channels_with_estimate(
    const SystemParams& p, const PathLossProfile& losses, Rng& rng) {
  const auto vars = estimate_variances(p, losses);
  ChannelEstimate est;
  est.g_ap_dl_hat.resize(p.n_rx, p.k_dl);
  est.e_ap_dl.resize(p.n_rx, p.k_dl);
  for (int k = 0; k < p.k_dl; ++k)
    for (int i = 0; i < p.n_rx; ++i) {
      est.g_ap_dl_hat(i, k) = rng.cgaussian(vars.g_hat[k]);
      est.e_ap_dl(i, k) = rng.cgaussian(vars.g_err[k]);
    }
  est.h_si_hat.resize(p.n_rx, p.n_tx);
  est.e_si.resize(p.n_rx, p.n_tx);
  for (int j = 0; j < p.n_tx; ++j)
    for (int i = 0; i < p.n_rx; ++i) {
      est.h_si_hat(i, j) = rng.cgaussian(vars.si_hat);
      est.e_si(i, j) = rng.cgaussian(vars.si_err);
    }
  est.var_g_hat = vars.g_hat;
  est.var_si_hat = vars.si_hat;

  ChannelRealization ch;
  ch.g_ap_dl = est.g_ap_dl_hat + est.e_ap_dl;
  ch.h_si = est.h_si_hat + est.e_si;
  ch.g_ap_ul.resize(p.n_tx, p.k_ul);
  for (int k = 0; k < p.k_ul; ++k)
    for (int i = 0; i < p.n_tx; ++i) ch.g_ap_ul(i, k) = rng.cgaussian(losses.beta_ap_ul[k]);
  ch.g_dl_ul.resize(p.k_dl, p.k_ul);
  for (int k = 0; k < p.k_ul; ++k)
    for (int m = 0; m < p.k_dl; ++m) ch.g_dl_ul(m, k) = rng.cgaussian(losses.beta_dl_ul(k, m));
  ch.g_ul_dl.resize(p.k_ul, p.k_dl);
  for (int k = 0; k < p.k_dl; ++k)
    for (int m = 0; m < p.k_ul; ++m) ch.g_ul_dl(m, k) = rng.cgaussian(losses.beta_ul_dl(k, m));
  return {std::move(ch), std::move(est)};
}

// Empirical estimator statistics across repeated training phases.
struct EstimationStats {
  VecR est_var;        // measured per-column variance of g_ap_dl_hat entries
  VecR err_var;        // measured per-column variance of e_ap_dl entries
  double corr_ge = 0;  // |corr| between estimate and error entries, pooled
  int trials = 0;
};

inline EstimationStats estimation_error_stats(const SystemParams& p, const PathLossProfile& losses,
                                              int trials, RngStream base) {
  if (trials < 1000) throw config_error("estimation_error_stats: need at least 1000 trials");
  const auto design = design_training(p);
  VecR sum_g2 = VecR::Zero(p.k_dl), sum_e2 = VecR::Zero(p.k_dl);
  Cplx sum_ge(0.0, 0.0);
  long count_ge = 0;
  for (int t = 0; t < trials; ++t) {
    Rng rng(base.seed, base.stream_id + static_cast<std::uint64_t>(t));
    const auto ch = draw_channels(p, losses, rng);
    const auto cc = make_combined_channel(ch, design, p, losses);
    const auto obs = simulate_training_rx(cc, p, rng);
    const auto est = mmse_estimate(obs, design, cc, p, losses);
    for (int k = 0; k < p.k_dl; ++k) {
      sum_g2[k] += est.g_ap_dl_hat.col(k).squaredNorm();
      sum_e2[k] += est.e_ap_dl.col(k).squaredNorm();
    }
    sum_ge += (est.g_ap_dl_hat.array().conjugate() * est.e_ap_dl.array()).sum();
    count_ge += est.g_ap_dl_hat.size();
  }
  EstimationStats out;
  const double per_col = static_cast<double>(trials) * p.n_rx;
  out.est_var = sum_g2 / per_col;
  out.err_var = sum_e2 / per_col;
  const double scale = std::sqrt(out.est_var.mean() * std::max(out.err_var.mean(), 1e-300));
  out.corr_ge = std::abs(sum_ge) / (static_cast<double>(count_ge) * std::max(scale, 1e-300));
  out.trials = trials;
  return out;
}

}  // namespace fdhap
