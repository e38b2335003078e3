#pragma once

#include <Eigen/QR>
#include <algorithm>
#include <vector>

#include "fdhap/analysis.hpp"
#include "fdhap/beamforming.hpp"
#include "fdhap/channel.hpp"
#include "fdhap/estimation.hpp"
#include "fdhap/optimizer.hpp"
#include "fdhap/parallel.hpp"
#include "fdhap/types.hpp"

namespace fdhap {

enum class CsiMode { perfect, estimated };
enum class BeamMode { mrt_baseline, optimized };
// exact: per-realization SINRs; large_n: the large-array simplification with
// the inter-beam cross terms dropped.
enum class SinrForm { exact, large_n };
// synthetic draws the estimate/error decomposition directly (same joint
// law); full_mmse runs the training phase and the estimator per trial.
enum class EstimatePath { synthetic, full_mmse };

struct TrialPlan {
  int n_trials = 10000;
  std::uint64_t base_seed = 1;
  SystemParams params;
  PathLossProfile losses;
  CsiMode csi_mode = CsiMode::perfect;
  BeamMode beam_mode = BeamMode::mrt_baseline;
  SinrForm form = SinrForm::exact;
  EstimatePath est_path = EstimatePath::synthetic;
  // draw the beam-projected self-interference coefficients instead of the
  // full n_rx x n_tx matrix (identical distribution, much cheaper)
  bool reduced_si_draw = true;

  void validate() const {
    if (n_trials < 1) throw config_error("TrialPlan: n_trials must be >= 1");
    params.validate();
    losses.validate(params);
  }
};

struct RateEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  int n_trials = 0;
};

namespace mc_detail {

inline RateEstimate reduce(const VecR& values) {
  RateEstimate est;
  est.n_trials = static_cast<int>(values.size());
  est.mean = values.mean();
  if (est.n_trials > 1) {
    const double var = (values.array() - est.mean).square().sum() / (est.n_trials - 1);
    est.std_error = std::sqrt(var / est.n_trials);
  }
  return est;
}

// Beam-projected SI coefficients V(k,l) = w_r,k^H * H^T * w_t,l for an iid
// CN(0, var) matrix H. Given the beams, V is Gaussian with covariance
// var * (R_r^H R_r-weighted) cross products; sampled as R_r^H * Xi * R_t
// using thin-QR triangles of the beam matrices.
inline MatC sample_projected_si(const MatC& w_r, const MatC& w_t, double var, Rng& rng) {
  const int a = static_cast<int>(w_r.cols());
  const int b = static_cast<int>(w_t.cols());
  MatC xi(a, b);
  for (int j = 0; j < b; ++j)
    for (int i = 0; i < a; ++i) xi(i, j) = rng.cgaussian(var);
  if (a == 0 || b == 0) return xi;
  Eigen::HouseholderQR<MatC> qr_r(w_r), qr_t(w_t);
  const MatC rr = qr_r.matrixQR().topRows(a).triangularView<Eigen::Upper>();
  const MatC rt = qr_t.matrixQR().topRows(b).triangularView<Eigen::Upper>();
  return rr.adjoint() * xi * rt;
}

inline MatC projected_si_from_matrix(const MatC& w_r, const MatC& h_si, const MatC& w_t) {
  return w_r.adjoint() * h_si.transpose() * w_t;
}

struct TrialRates {
  VecR uplink;    // per sensor, (1-alpha)*log2(1+gamma)
  VecR downlink;  // per user
};

// Shared per-trial state for the rate estimators.
struct TrialContext {
  ChannelRealization ch;
  ChannelEstimate est;  // only when csi_mode == estimated
  bool has_estimate = false;
};

inline TrialContext make_context(const TrialPlan& plan, Rng& rng) {
  TrialContext ctx;
  const auto& p = plan.params;
  if (plan.csi_mode == CsiMode::estimated) {
    if (plan.est_path == EstimatePath::synthetic) {
      auto [ch, est] = draw_channels_with_estimate(p, plan.losses, rng);
      ctx.ch = std::move(ch);
      ctx.est = std::move(est);
    } else {
      ctx.ch = draw_channels(p, plan.losses, rng);
      const auto design = design_training(p);
      const auto cc = make_combined_channel(ctx.ch, design, p, plan.losses);
      const auto obs = simulate_training_rx(cc, p, rng);
      ctx.est = mmse_estimate(obs, design, cc, p, plan.losses);
    }
    ctx.has_estimate = true;
  } else {
    ctx.ch = draw_channels(p, plan.losses, rng);
  }
  return ctx;
}

inline TrialRates exact_rates_with_beam(const TrialPlan& plan, const TrialContext& ctx, Rng& rng,
                                        const MatC& w_e, double alpha);

// Exact per-realization rates with MRC receive, MRT transmit (true or
// estimated user channels) and matched energy beams. The residual SI couples
// through the estimation error under estimated CSI.
inline TrialRates exact_rates(const TrialPlan& plan, const TrialContext& ctx, Rng& rng) {
  return exact_rates_with_beam(plan, ctx, rng, mrt_energy_beams(ctx.ch.g_ap_ul), plan.params.alpha);
}

// Large-array rates: own-signal and interference terms keep only their
// leading norms and beam-projected couplings.
inline TrialRates large_n_rates(const TrialPlan& plan, const TrialContext& ctx, Rng& rng) {
  const auto& p = plan.params;
  const double kp = kappa(p.eta, p.alpha) * p.p_ap;
  const MatC& gu = ctx.ch.g_ap_ul;
  const MatC& gd = ctx.ch.g_ap_dl;

  const MatC w_r = mrc_receive_beams(gu);
  const MatC w_t = mrt_transmit_beams(ctx.has_estimate ? ctx.est.g_ap_dl_hat : gd);
  const double si_var = ctx.has_estimate ? (p.sigma_si2 - ctx.est.var_si_hat) : p.sigma_si2;
  MatC coupling;
  if (plan.reduced_si_draw) {
    coupling = sample_projected_si(w_r, w_t, si_var, rng);
  } else {
    coupling = projected_si_from_matrix(w_r, ctx.has_estimate ? ctx.est.e_si : ctx.ch.h_si, w_t);
  }

  TrialRates out;
  out.uplink.resize(p.k_ul);
  for (int k = 0; k < p.k_ul; ++k) {
    const double bk = plan.losses.beta_ap_ul[k];
    const double num = kp * p.n_tx * bk * gu.col(k).squaredNorm();
    double inter = 0.0;
    for (int l = 0; l < p.k_ul; ++l) {
      if (l == k) continue;
      const double proj = std::norm(gu.col(k).dot(gu.col(l))) / gu.col(k).squaredNorm();
      inter += kp * p.n_tx * plan.losses.beta_ap_ul[l] * proj;
    }
    const double si = p.p_ap * coupling.row(k).squaredNorm();
    out.uplink[k] = (1.0 - p.alpha) * log2_1p(num / (inter + si + p.sigma_n2));
  }
  out.downlink.resize(p.k_dl);
  for (int k = 0; k < p.k_dl; ++k) {
    const double num = p.p_ap * gd.col(k).squaredNorm();
    double inter = 0.0;
    for (int l = 0; l < p.k_dl; ++l) {
      if (l == k) continue;
      inter += p.p_ap * std::norm(gd.col(k).transpose() * gd.col(l).conjugate()) /
               gd.col(l).squaredNorm();
    }
    double sens = 0.0;
    for (int l = 0; l < p.k_ul; ++l)
      sens += kp * p.n_tx * plan.losses.beta_ap_ul[l] * std::norm(ctx.ch.g_ul_dl(l, k));
    out.downlink[k] = (1.0 - p.alpha) * log2_1p(num / (inter + sens + p.sigma_n2));
  }
  return out;
}

// Exact rates with a caller-supplied energy beam and time split.
inline TrialRates exact_rates_with_beam(const TrialPlan& plan, const TrialContext& ctx, Rng& rng,
                                        const MatC& w_e, double alpha) {
  SystemParams p2 = plan.params;
  p2.alpha = alpha;
  BeamformerSet beams;
  beams.w_r = mrc_receive_beams(ctx.ch.g_ap_ul);
  beams.w_t = mrt_transmit_beams(ctx.has_estimate ? ctx.est.g_ap_dl_hat : ctx.ch.g_ap_dl);
  beams.w_e = w_e;
  const auto powers = harvested_powers(ctx.ch, beams.w_e, p2);
  const double si_var = ctx.has_estimate ? (p2.sigma_si2 - ctx.est.var_si_hat) : p2.sigma_si2;
  MatC coupling;
  if (plan.reduced_si_draw)
    coupling = sample_projected_si(beams.w_r, beams.w_t, si_var, rng);
  else
    coupling = projected_si_from_matrix(beams.w_r, ctx.has_estimate ? ctx.est.e_si : ctx.ch.h_si,
                                        beams.w_t);
  VecR si_terms(p2.k_ul);
  for (int k = 0; k < p2.k_ul; ++k) si_terms[k] = p2.p_ap * coupling.row(k).squaredNorm();
  TrialRates out;
  const VecR gu = uplink_sinr(ctx.ch, beams, powers, p2, si_terms);
  const VecR gd = downlink_sinr(ctx.ch, beams, powers, p2);
  out.uplink.resize(p2.k_ul);
  for (int k = 0; k < p2.k_ul; ++k) out.uplink[k] = (1.0 - p2.alpha) * log2_1p(gu[k]);
  out.downlink.resize(p2.k_dl);
  for (int k = 0; k < p2.k_dl; ++k) out.downlink[k] = (1.0 - p2.alpha) * log2_1p(gd[k]);
  return out;
}

inline TrialRates trial_rates(const TrialPlan& plan, Rng& rng,
                              const OptimizerOptions& opt_opts = {},
                              const std::vector<double>& alpha_grid = {}) {
  TrialContext ctx = make_context(plan, rng);
  if (plan.beam_mode == BeamMode::optimized) {
    std::vector<double> grid =
        alpha_grid.empty() ? std::vector<double>{plan.params.alpha} : alpha_grid;
    auto res = optimize(ctx.ch, plan.params, plan.losses, grid, plan.params.r_ul_min, rng, opt_opts,
                        ctx.has_estimate ? &ctx.est : nullptr);
    if (res.status == OptimizeStatus::infeasible) {
      TrialRates out;
      out.uplink = VecR::Zero(plan.params.k_ul);
      out.downlink = VecR::Zero(plan.params.k_dl);
      return out;
    }
    return exact_rates_with_beam(plan, ctx, rng, res.w_e, res.alpha_star);
  }
  return plan.form == SinrForm::exact ? exact_rates(plan, ctx, rng) : large_n_rates(plan, ctx, rng);
}

}  // namespace mc_detail

// Per-sensor uplink ergodic-rate estimates, one Monte Carlo pass.
inline std::vector<RateEstimate> mc_uplink_rates(const TrialPlan& plan) {
  plan.validate();
  MatR values(plan.n_trials, plan.params.k_ul);
  parallel_for(plan.n_trials, [&](int t) {
    Rng rng(plan.base_seed, static_cast<std::uint64_t>(t));
    values.row(t) = mc_detail::trial_rates(plan, rng).uplink.transpose();
  });
  std::vector<RateEstimate> out(plan.params.k_ul);
  for (int k = 0; k < plan.params.k_ul; ++k) out[k] = mc_detail::reduce(values.col(k));
  return out;
}

inline RateEstimate mc_uplink_rate(const TrialPlan& plan, int k) {
  if (k < 0 || k >= plan.params.k_ul) throw config_error("mc_uplink_rate: sensor index out of range");
  return mc_uplink_rates(plan)[k];
}

// Uplink sum rate (per-trial sum over sensors).
inline RateEstimate mc_uplink_sum_rate(const TrialPlan& plan) {
  plan.validate();
  VecR values(plan.n_trials);
  parallel_for(plan.n_trials, [&](int t) {
    Rng rng(plan.base_seed, static_cast<std::uint64_t>(t));
    values[t] = mc_detail::trial_rates(plan, rng).uplink.sum();
  });
  return mc_detail::reduce(values);
}

// Per-user downlink estimates. Under estimated CSI the achievable rate uses
// the effective-channel statistics learned across trials (mean, variance and
// average interference), with batch-resampled standard errors.
inline std::vector<RateEstimate> mc_downlink_rates(const TrialPlan& plan) {
  plan.validate();
  const auto& p = plan.params;
  if (plan.csi_mode == CsiMode::perfect || plan.form == SinrForm::large_n) {
    MatR values(plan.n_trials, p.k_dl);
    parallel_for(plan.n_trials, [&](int t) {
      Rng rng(plan.base_seed, static_cast<std::uint64_t>(t));
      values.row(t) = mc_detail::trial_rates(plan, rng).downlink.transpose();
    });
    std::vector<RateEstimate> out(p.k_dl);
    for (int k = 0; k < p.k_dl; ++k) out[k] = mc_detail::reduce(values.col(k));
    return out;
  }

  // estimated CSI: users only know the average effective channel
  struct Moments {
    VecC eff_sum;
    VecR eff_sq_sum;
    VecR interf_sum;
  };
  std::vector<Moments> per_trial(plan.n_trials);
  parallel_for(plan.n_trials, [&](int t) {
    Rng rng(plan.base_seed, static_cast<std::uint64_t>(t));
    auto ctx = mc_detail::make_context(plan, rng);
    const MatC w_t = mrt_transmit_beams(ctx.est.g_ap_dl_hat);
    const MatC w_e = mrt_energy_beams(ctx.ch.g_ap_ul);
    const auto powers = harvested_powers(ctx.ch, w_e, p);
    Moments m;
    m.eff_sum.resize(p.k_dl);
    m.eff_sq_sum.resize(p.k_dl);
    m.interf_sum.resize(p.k_dl);
    for (int k = 0; k < p.k_dl; ++k) {
      const Cplx eff = ctx.ch.g_ap_dl.col(k).transpose() * w_t.col(k);
      m.eff_sum[k] = eff;
      m.eff_sq_sum[k] = std::norm(eff);
      double interf = 0.0;
      for (int l = 0; l < p.k_dl; ++l) {
        if (l == k) continue;
        interf += p.p_ap * std::norm(Cplx(ctx.ch.g_ap_dl.col(k).transpose() * w_t.col(l)));
      }
      for (int l = 0; l < p.k_ul; ++l) interf += powers.p_ul[l] * std::norm(ctx.ch.g_ul_dl(l, k));
      m.interf_sum[k] = interf;
    }
    per_trial[t] = std::move(m);
  });

  auto rate_from_range = [&](int lo, int hi, int k) {
    Cplx eff(0, 0);
    double eff_sq = 0, interf = 0;
    for (int t = lo; t < hi; ++t) {
      eff += per_trial[t].eff_sum[k];
      eff_sq += per_trial[t].eff_sq_sum[k];
      interf += per_trial[t].interf_sum[k];
    }
    const double n = hi - lo;
    const Cplx mean_eff = eff / n;
    const double var_eff = std::max(0.0, eff_sq / n - std::norm(mean_eff));
    const double num = p.p_ap * std::norm(mean_eff);
    const double den = p.p_ap * var_eff + interf / n + p.sigma_n2;
    return (1.0 - p.alpha) * log2_1p(num / den);
  };

  std::vector<RateEstimate> out(p.k_dl);
  const int n_batches = std::max(1, std::min(10, plan.n_trials / 10));
  for (int k = 0; k < p.k_dl; ++k) {
    out[k].mean = rate_from_range(0, plan.n_trials, k);
    out[k].n_trials = plan.n_trials;
    if (n_batches > 1) {
      VecR batch(n_batches);
      const int bs = plan.n_trials / n_batches;
      for (int b = 0; b < n_batches; ++b) {
        const int lo = b * bs;
        const int hi = (b == n_batches - 1) ? plan.n_trials : lo + bs;
        batch[b] = rate_from_range(lo, hi, k);
      }
      const double bm = batch.mean();
      const double var = (batch.array() - bm).square().sum() / (n_batches - 1);
      out[k].std_error = std::sqrt(var / n_batches);
    }
  }
  return out;
}

inline RateEstimate mc_downlink_rate(const TrialPlan& plan, int k) {
  if (k < 0 || k >= plan.params.k_dl) throw config_error("mc_downlink_rate: user index out of range");
  return mc_downlink_rates(plan)[k];
}

// One point of the achievable-rate frontier.
struct RateRegionPoint {
  double r_ul_min = 0.0;
  double dl_mean = 0.0;      // relaxation-surface downlink sum rate
  double dl_se = 0.0;
  double ul_mean = 0.0;
  double rec_dl_mean = 0.0;  // after rank-one recovery (optimized mode only)
  double rec_ul_mean = 0.0;
  int n_feasible = 0;
  int n_trials = 0;
};

namespace mc_detail {

struct FrontierTrial {
  bool feasible = false;
  double dl = 0.0, ul = 0.0;
  double rec_dl = 0.0, rec_ul = 0.0;
};

// Best matched-beam operating point over the alpha grid meeting the floor.
inline FrontierTrial baseline_point(const ChannelRealization& ch, const SystemParams& p,
                                    const PathLossProfile& losses, double r_ul_min,
                                    const std::vector<double>& alpha_grid,
                                    UplinkTimeFactor time_factor) {
  FrontierTrial out;
  const MatC w_mrt = mrt_energy_beams(ch.g_ap_ul);
  const VecC v = opt_detail::vectorize(w_mrt);
  for (double alpha : alpha_grid) {
    if (alpha <= 0.0 || alpha >= 1.0) continue;
    SystemParams p2 = p;
    p2.r_ul_min = r_ul_min;
    const SdrProblem pr = build_sdr_problem(ch, p2, losses, alpha, time_factor);
    const double ul = ul_rate_from_logsum(pr, ul_logsum(pr, v));
    if (ul < r_ul_min) continue;
    const double dl = dl_objective(pr, interference_levels(pr, v));
    if (!out.feasible || dl > out.dl) {
      out.feasible = true;
      out.dl = dl;
      out.ul = ul;
      out.rec_dl = dl;
      out.rec_ul = ul;
    }
  }
  return out;
}

}  // namespace mc_detail

// Maximum matched-beam uplink sum rate over the alpha grid (used to place
// the frontier grid).
inline double baseline_max_ul_rate(const ChannelRealization& ch, const SystemParams& p,
                                   const PathLossProfile& losses,
                                   const std::vector<double>& alpha_grid,
                                   UplinkTimeFactor time_factor = UplinkTimeFactor::as_printed) {
  const MatC w_mrt = mrt_energy_beams(ch.g_ap_ul);
  const VecC v = opt_detail::vectorize(w_mrt);
  double best = 0.0;
  for (double alpha : alpha_grid) {
    if (alpha <= 0.0 || alpha >= 1.0) continue;
    const SdrProblem pr = build_sdr_problem(ch, p, losses, alpha, time_factor);
    best = std::max(best, ul_rate_from_logsum(pr, ul_logsum(pr, v)));
  }
  return best;
}

// Uplink floor grid spanning [0, 95% of the worst-trial matched-beam top].
inline std::vector<double> make_r_ul_grid(const TrialPlan& plan, const std::vector<double>& alpha_grid,
                                          int n_points,
                                          UplinkTimeFactor time_factor = UplinkTimeFactor::as_printed) {
  plan.validate();
  if (n_points < 2) throw config_error("make_r_ul_grid: need at least 2 points");
  VecR tops(plan.n_trials);
  parallel_for(plan.n_trials, [&](int t) {
    Rng rng(plan.base_seed, static_cast<std::uint64_t>(t));
    const auto ch = draw_channels(plan.params, plan.losses, rng);
    tops[t] = baseline_max_ul_rate(ch, plan.params, plan.losses, alpha_grid, time_factor);
  });
  const double top = 0.95 * tops.minCoeff();
  std::vector<double> grid(n_points);
  for (int i = 0; i < n_points; ++i) grid[i] = top * i / (n_points - 1);
  return grid;
}

// Sweeps the uplink floor and records the achieved (uplink, downlink)
// sum-rate pairs averaged over realizations, for the plan's beam mode.
inline std::vector<RateRegionPoint> rate_region(const TrialPlan& plan,
                                                const std::vector<double>& r_ul_grid,
                                                const std::vector<double>& alpha_grid,
                                                const OptimizerOptions& opts = {}) {
  plan.validate();
  if (r_ul_grid.empty() || alpha_grid.empty())
    throw config_error("rate_region: grids must be nonempty");
  const int n_pts = static_cast<int>(r_ul_grid.size());
  std::vector<std::vector<mc_detail::FrontierTrial>> cells(
      n_pts, std::vector<mc_detail::FrontierTrial>(plan.n_trials));

  parallel_for(plan.n_trials, [&](int t) {
    Rng rng(plan.base_seed, static_cast<std::uint64_t>(t));
    const auto ch = draw_channels(plan.params, plan.losses, rng);
    for (int i = 0; i < n_pts; ++i) {
      const double r_req = r_ul_grid[i];
      if (plan.beam_mode == BeamMode::mrt_baseline) {
        cells[i][t] = mc_detail::baseline_point(ch, plan.params, plan.losses, r_req, alpha_grid,
                                                opts.time_factor);
      } else {
        auto res = optimize(ch, plan.params, plan.losses, alpha_grid, r_req, rng, opts);
        mc_detail::FrontierTrial ft;
        if (res.status != OptimizeStatus::infeasible) {
          ft.feasible = true;
          ft.dl = res.sdr_dl_sum_rate;
          ft.ul = res.sdr_ul_sum_rate;
          ft.rec_dl = res.dl_sum_rate;
          ft.rec_ul = res.ul_sum_rate;
        }
        cells[i][t] = ft;
      }
    }
  });

  std::vector<RateRegionPoint> out(n_pts);
  for (int i = 0; i < n_pts; ++i) {
    RateRegionPoint& pt = out[i];
    pt.r_ul_min = r_ul_grid[i];
    pt.n_trials = plan.n_trials;
    std::vector<double> dl_vals;
    for (const auto& ft : cells[i]) {
      if (!ft.feasible) continue;
      ++pt.n_feasible;
      pt.dl_mean += ft.dl;
      pt.ul_mean += ft.ul;
      pt.rec_dl_mean += ft.rec_dl;
      pt.rec_ul_mean += ft.rec_ul;
      dl_vals.push_back(ft.dl);
    }
    if (pt.n_feasible > 0) {
      pt.dl_mean /= pt.n_feasible;
      pt.ul_mean /= pt.n_feasible;
      pt.rec_dl_mean /= pt.n_feasible;
      pt.rec_ul_mean /= pt.n_feasible;
      if (pt.n_feasible > 1) {
        double var = 0.0;
        for (double v : dl_vals) var += (v - pt.dl_mean) * (v - pt.dl_mean);
        var /= (pt.n_feasible - 1);
        pt.dl_se = std::sqrt(var / pt.n_feasible);
      }
    }
  }
  return out;
}

enum class PowerLaw { inv_square, inv_linear };

struct ScalingRow {
  int n_tx = 0;
  double p_ap = 0.0;
  double mc_rate = 0.0;
  double mc_se = 0.0;
  double bound = 0.0;      // closed-form lower bound (CSI mode dependent)
  double asymptote = 0.0;  // infinite-array limit under 1/n^2 scaling
};

// Uplink sum rate versus array size with transmit power scaled down as
// e_ap/n^2 (perfect CSI) or e_ap/n (estimated CSI).
inline std::vector<ScalingRow> scaling_experiment(const TrialPlan& plan,
                                                  const std::vector<int>& n_tx_list, double e_ap,
                                                  PowerLaw law) {
  plan.validate();
  if (!(e_ap >= 0.0)) throw config_error("scaling_experiment: e_ap must be nonnegative");
  std::vector<ScalingRow> rows;
  rows.reserve(n_tx_list.size());
  for (int n : n_tx_list) {
    if (n < 2) throw config_error("scaling_experiment: n_tx must be >= 2");
    TrialPlan sub = plan;
    sub.params.n_tx = n;
    sub.params.p_ap = law == PowerLaw::inv_square ? e_ap / (static_cast<double>(n) * n) : e_ap / n;
    ScalingRow row;
    row.n_tx = n;
    row.p_ap = sub.params.p_ap;
    if (sub.params.p_ap > 0.0) {
      const auto est = mc_uplink_sum_rate(sub);
      row.mc_rate = est.mean;
      row.mc_se = est.std_error;
      RateBoundInputs in{sub.params, sub.losses};
      for (int k = 0; k < sub.params.k_ul; ++k) {
        row.bound += plan.csi_mode == CsiMode::perfect ? uplink_rate_lower_bound(in, k)
                                                       : uplink_rate_lower_bound_icsi(in, k);
        row.asymptote += uplink_rate_asymptote_pcsi(in, k, e_ap);
      }
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace fdhap
