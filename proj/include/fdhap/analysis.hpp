#pragma once

#include "fdhap/beamforming.hpp"
#include "fdhap/estimation.hpp"
#include "fdhap/quadrature.hpp"
#include "fdhap/types.hpp"

namespace fdhap {

// Inputs for the closed-form rate expressions. Coefficients are recomputed
// from the parameters on every call so they can never go stale.
struct RateBoundInputs {
  SystemParams params;
  PathLossProfile losses;

  double kp() const { return kappa(params.eta, params.alpha) * params.p_ap; }

  // uplink numerator/interference coefficient phi_l = kappa*P*N_t*beta_l^2
  double phi(int l) const {
    const double b = losses.beta_ap_ul[l];
    return kp() * params.n_tx * b * b;
  }
  // downlink own-signal coefficient psi_k = P * beta_k^2
  double psi_dl(int k) const {
    const double b = losses.beta_ap_dl[k];
    return params.p_ap * b * b;
  }
  // downlink sensor-interference coefficient psi_l = kappa*P*N_t*beta_ul,l*beta_ud(k,l)
  double psi_ul(int k, int l) const {
    return kp() * params.n_tx * losses.beta_ap_ul[l] * losses.beta_ul_dl(k, l);
  }
};

namespace analysis_detail {

// exp(-n * log1p(c*z)), i.e. (1 + c z)^-n, stable for all z >= 0.
inline double pow_recip(double c, double z, double n) { return std::exp(-n * std::log1p(c * z)); }

}  // namespace analysis_detail

// Uplink ergodic-rate approximation for sensor k (perfect CSI, MRC/MRT,
// matched energy beams), evaluated by quadrature. Integrand has a removable
// singularity at z = 0 with limit n_tx * phi_k.
inline double uplink_rate_integral(const RateBoundInputs& in, int k,
                                   const QuadratureConfig& quad = {}) {
  const auto& p = in.params;
  const double phi_k = in.phi(k);
  if (!(phi_k >= 0.0)) throw domain_error("uplink_rate_integral: phi_k must be nonnegative");
  if (phi_k == 0.0) return 0.0;
  auto f = [&](double z) {
    using analysis_detail::pow_recip;
    double v = pow_recip(p.p_ap * p.sigma_si2, z, p.k_dl);
    v *= -std::expm1(-p.n_tx * std::log1p(phi_k * z));
    for (int l = 0; l < p.k_ul; ++l)
      if (l != k) v *= pow_recip(in.phi(l), z, 1.0);
    return v * std::exp(-p.sigma_n2 * z) / z;
  };
  const double leading = p.n_tx * phi_k;
  const double nats = integrate_semi_infinite(f, leading, p.sigma_n2, quad);
  return (1.0 - p.alpha) * nats / kLn2;
}

// Closed-form uplink lower bound for sensor k (perfect CSI).
inline double uplink_rate_lower_bound(const RateBoundInputs& in, int k) {
  const auto& p = in.params;
  if (p.n_tx < 2) throw domain_error("uplink_rate_lower_bound: needs n_tx >= 2");
  const double b_k = in.losses.beta_ap_ul[k];
  const double num = in.kp() * b_k * b_k * (p.n_tx + 2.0) * (p.n_tx - 1.0);
  double inter = 0.0;
  for (int l = 0; l < p.k_ul; ++l) {
    if (l == k) continue;
    const double b_l = in.losses.beta_ap_ul[l];
    inter += b_l * b_l;
  }
  const double den = in.kp() * p.n_tx * inter + p.k_dl * p.p_ap * p.sigma_si2 + p.sigma_n2;
  return (1.0 - p.alpha) * log2_1p(num / den);
}

// Uplink limit under the power scaling p_ap = e_ap / n_tx^2 as n_tx grows.
inline double uplink_rate_asymptote_pcsi(const RateBoundInputs& in, int k, double e_ap) {
  if (!(e_ap >= 0.0)) throw domain_error("uplink_rate_asymptote_pcsi: e_ap must be nonnegative");
  const auto& p = in.params;
  const double b_k = in.losses.beta_ap_ul[k];
  const double kap = kappa(p.eta, p.alpha);
  return (1.0 - p.alpha) * log2_1p(kap * b_k * b_k * e_ap / p.sigma_n2);
}

// Uplink lower bound with estimated CSI: the self-interference term shrinks
// by 1/(tau*P*sigma_si^2 + 1) after estimated-SI cancellation.
inline double uplink_rate_lower_bound_icsi(const RateBoundInputs& in, int k) {
  const auto& p = in.params;
  if (p.n_tx < 2) throw domain_error("uplink_rate_lower_bound_icsi: needs n_tx >= 2");
  const double b_k = in.losses.beta_ap_ul[k];
  const double num = in.kp() * b_k * b_k * (p.n_tx + 2.0) * (p.n_tx - 1.0);
  double inter = 0.0;
  for (int l = 0; l < p.k_ul; ++l) {
    if (l == k) continue;
    const double b_l = in.losses.beta_ap_ul[l];
    inter += b_l * b_l;
  }
  const double tau = static_cast<double>(p.tau_effective());
  const double si = p.k_dl * p.p_ap * p.sigma_si2 / (tau * p.p_ap * p.sigma_si2 + 1.0);
  const double den = in.kp() * p.n_tx * inter + si + p.sigma_n2;
  return (1.0 - p.alpha) * log2_1p(num / den);
}

// Downlink ergodic-rate approximation for user k (perfect CSI). The product
// runs over every sensor; the removable singularity limit is n_rx * psi_k.
inline double downlink_rate_integral(const RateBoundInputs& in, int k,
                                     const QuadratureConfig& quad = {}) {
  const auto& p = in.params;
  const double psi_k = in.psi_dl(k);
  if (!(psi_k >= 0.0)) throw domain_error("downlink_rate_integral: psi_k must be nonnegative");
  if (psi_k == 0.0) return 0.0;
  auto f = [&](double z) {
    using analysis_detail::pow_recip;
    double v = pow_recip(psi_k, z, p.k_dl - 1);
    v *= -std::expm1(-p.n_rx * std::log1p(psi_k * z));
    for (int l = 0; l < p.k_ul; ++l) v *= pow_recip(in.psi_ul(k, l), z, 1.0);
    return v * std::exp(-p.sigma_n2 * z) / z;
  };
  const double leading = p.n_rx * psi_k;
  const double nats = integrate_semi_infinite(f, leading, p.sigma_n2, quad);
  return (1.0 - p.alpha) * nats / kLn2;
}

// Closed-form downlink lower bound for user k (perfect CSI).
inline double downlink_rate_lower_bound(const RateBoundInputs& in, int k) {
  const auto& p = in.params;
  if (p.n_rx < 2) throw domain_error("downlink_rate_lower_bound: needs n_rx >= 2");
  const double b_k = in.losses.beta_ap_dl[k];
  const double num = p.p_ap * b_k * (p.n_rx - 1.0);
  double sens = 0.0;
  for (int l = 0; l < p.k_ul; ++l) sens += in.losses.beta_ap_ul[l] * in.losses.beta_ul_dl(k, l);
  const double den = (p.k_dl - 1.0) * p.p_ap * b_k + in.kp() * p.n_tx * sens + p.sigma_n2;
  return (1.0 - p.alpha) * log2_1p(num / den);
}

// Downlink rate under MMSE-estimated CSI. Returned without the (1-alpha)
// prefactor by default; set apply_time_factor to include it.
inline double downlink_rate_icsi(const RateBoundInputs& in, const VecR& var_g_hat, int k,
                                 bool apply_time_factor = false) {
  const auto& p = in.params;
  if (var_g_hat.size() != p.k_dl) throw config_error("downlink_rate_icsi: variance vector size mismatch");
  const double s2 = var_g_hat[k];
  const double num = p.p_ap * static_cast<double>(p.n_rx) * p.n_rx * s2 * s2;
  double beta_sum = 0.0;
  for (int l = 0; l < p.k_dl; ++l) beta_sum += in.losses.beta_ap_dl[l];
  double sens = 0.0;
  for (int l = 0; l < p.k_ul; ++l) sens += in.losses.beta_ap_ul[l] * in.losses.beta_ul_dl(k, l);
  const double den =
      p.p_ap * p.n_rx * s2 * beta_sum + in.kp() * p.n_tx * p.k_ul * sens + p.sigma_n2;
  const double rate = log2_1p(num / den);
  return apply_time_factor ? (1.0 - p.alpha) * rate : rate;
}

}  // namespace fdhap
