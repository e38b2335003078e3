#pragma once

#include <optional>

#include "fdhap/channel.hpp"
#include "fdhap/estimation.hpp"
#include "fdhap/types.hpp"

namespace fdhap {

// Harvested-energy scale factor eta*alpha/(1-alpha).
inline double kappa(double eta, double alpha) {
  if (!(alpha >= 0.0 && alpha < 1.0)) throw domain_error("kappa: alpha must lie in [0, 1)");
  if (!(eta > 0.0 && eta < 1.0)) throw domain_error("kappa: eta must lie in (0, 1)");
  return eta * alpha / (1.0 - alpha);
}

// Receive (MRC), transmit (MRT) and energy beamformers.
// w_r, w_t have unit-norm columns; ||w_e||_F^2 = k_ul.
struct BeamformerSet {
  MatC w_r;  // n_tx x k_ul
  MatC w_t;  // n_rx x k_dl
  MatC w_e;  // n_tx x k_ul
};

namespace detail {
inline void check_nonzero_columns(const MatC& m, const char* name) {
  for (Eigen::Index c = 0; c < m.cols(); ++c)
    if (!(m.col(c).norm() > 0.0))
      throw degenerate_channel_error(std::string(name) + ": zero-norm channel column");
}
}  // namespace detail

// w_r,k = g_ap_ul,k / ||.|| ; w_t,k = conj(g_ap_dl,k) / ||.||.
inline MatC mrc_receive_beams(const MatC& g_ap_ul) {
  detail::check_nonzero_columns(g_ap_ul, "mrc_receive_beams");
  MatC w = g_ap_ul;
  for (Eigen::Index c = 0; c < w.cols(); ++c) w.col(c) /= w.col(c).norm();
  return w;
}

inline MatC mrt_transmit_beams(const MatC& g_ap_dl) {
  detail::check_nonzero_columns(g_ap_dl, "mrt_transmit_beams");
  MatC w = g_ap_dl.conjugate();
  for (Eigen::Index c = 0; c < w.cols(); ++c) w.col(c) /= w.col(c).norm();
  return w;
}

// Energy beams matched to each sensor channel; per-column unit norm already
// meets the Frobenius budget ||W||_F^2 = k_ul, the rescale keeps it exact.
inline MatC mrt_energy_beams(const MatC& g_ap_ul) {
  detail::check_nonzero_columns(g_ap_ul, "mrt_energy_beams");
  MatC w = g_ap_ul.conjugate();
  for (Eigen::Index c = 0; c < w.cols(); ++c) w.col(c) /= w.col(c).norm();
  const double target = std::sqrt(static_cast<double>(w.cols()));
  w *= target / w.norm();
  return w;
}

// MRC/MRT beams from true channels, optionally substituting the estimated
// user channels for the transmit side.
inline BeamformerSet mrc_mrt_beams(const ChannelRealization& ch,
                                   const ChannelEstimate* estimate = nullptr) {
  BeamformerSet b;
  b.w_r = mrc_receive_beams(ch.g_ap_ul);
  b.w_t = mrt_transmit_beams(estimate ? estimate->g_ap_dl_hat : ch.g_ap_dl);
  b.w_e = mrt_energy_beams(ch.g_ap_ul);
  return b;
}

// Per-sensor transmit powers from the harvesting phase.
struct SensorPowers {
  VecR p_ul;          // k_ul entries
  double kappa = 0.0;
};

// P_ul,k = kappa * p_ap * ||g_ap_ul,k^T W_E||^2. Noise and user-signal
// harvesting are excluded.
inline SensorPowers harvested_powers(const ChannelRealization& ch, const MatC& w_e,
                                     const SystemParams& p) {
  SensorPowers out;
  out.kappa = kappa(p.eta, p.alpha);
  out.p_ul.resize(ch.g_ap_ul.cols());
  for (Eigen::Index k = 0; k < ch.g_ap_ul.cols(); ++k) {
    const VecC row = (ch.g_ap_ul.col(k).transpose() * w_e).transpose();
    out.p_ul[k] = out.kappa * p.p_ap * row.squaredNorm();
  }
  return out;
}

// Residual self-interference power per sensor stream after subtracting the
// estimated-SI component: only the estimation error contributes.
inline VecR imperfect_csi_uplink_si_terms(const ChannelEstimate& estimate, const BeamformerSet& beams,
                                          const SystemParams& p) {
  const MatC coupling = beams.w_r.adjoint() * estimate.e_si.transpose() * beams.w_t;  // k_ul x k_dl
  VecR out(coupling.rows());
  for (Eigen::Index k = 0; k < coupling.rows(); ++k)
    out[k] = p.p_ap * coupling.row(k).squaredNorm();
  return out;
}

// Uplink SINR per sensor. The self-interference denominator term can be
// overridden (imperfect-CSI residual); by default it is computed from the
// true SI channel.
inline VecR uplink_sinr(const ChannelRealization& ch, const BeamformerSet& beams,
                        const SensorPowers& powers, const SystemParams& p,
                        const std::optional<VecR>& si_terms = std::nullopt) {
  const int k_ul = static_cast<int>(ch.g_ap_ul.cols());
  VecR si(k_ul);
  if (si_terms) {
    si = *si_terms;
  } else if (beams.w_t.cols() > 0) {
    const MatC coupling = beams.w_r.adjoint() * ch.h_si.transpose() * beams.w_t;  // k_ul x k_dl
    for (int k = 0; k < k_ul; ++k) si[k] = p.p_ap * coupling.row(k).squaredNorm();
  } else {
    si.setZero();
  }
  VecR gamma(k_ul);
  for (int k = 0; k < k_ul; ++k) {
    const Cplx own = beams.w_r.col(k).dot(ch.g_ap_ul.col(k));  // w^H g
    const double num = powers.p_ul[k] * std::norm(own);
    double inter = 0.0;
    for (int l = 0; l < k_ul; ++l) {
      if (l == k) continue;
      inter += powers.p_ul[l] * std::norm(beams.w_r.col(k).dot(ch.g_ap_ul.col(l)));
    }
    gamma[k] = num / (inter + si[k] + p.sigma_n2);
  }
  return gamma;
}

// Downlink SINR per user, including interference from the sensors'
// harvested-power transmissions.
inline VecR downlink_sinr(const ChannelRealization& ch, const BeamformerSet& beams,
                          const SensorPowers& powers, const SystemParams& p) {
  const int k_dl = static_cast<int>(ch.g_ap_dl.cols());
  const int k_ul = static_cast<int>(ch.g_ap_ul.cols());
  VecR gamma(k_dl);
  for (int k = 0; k < k_dl; ++k) {
    const Cplx own = ch.g_ap_dl.col(k).transpose() * beams.w_t.col(k);
    const double num = p.p_ap * std::norm(own);
    double inter = 0.0;
    for (int l = 0; l < k_dl; ++l) {
      if (l == k) continue;
      inter += p.p_ap * std::norm(Cplx(ch.g_ap_dl.col(k).transpose() * beams.w_t.col(l)));
    }
    double sensor = 0.0;
    for (int l = 0; l < k_ul; ++l) sensor += powers.p_ul[l] * std::norm(ch.g_ul_dl(l, k));
    gamma[k] = num / (inter + sensor + p.sigma_n2);
  }
  return gamma;
}

// Raw SINRs plus the (1-alpha)-weighted sum rates.
struct SinrReport {
  VecR uplink;
  VecR downlink;
  double uplink_rate_sum = 0.0;
  double downlink_rate_sum = 0.0;
};

inline SinrReport make_sinr_report(VecR uplink, VecR downlink, double alpha) {
  SinrReport r;
  r.uplink = std::move(uplink);
  r.downlink = std::move(downlink);
  for (Eigen::Index i = 0; i < r.uplink.size(); ++i) r.uplink_rate_sum += log2_1p(r.uplink[i]);
  for (Eigen::Index i = 0; i < r.downlink.size(); ++i) r.downlink_rate_sum += log2_1p(r.downlink[i]);
  r.uplink_rate_sum *= (1.0 - alpha);
  r.downlink_rate_sum *= (1.0 - alpha);
  return r;
}

}  // namespace fdhap
