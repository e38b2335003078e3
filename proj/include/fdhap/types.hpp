#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>
#include <string>

#include "fdhap/errors.hpp"

namespace fdhap {

using MatC = Eigen::MatrixXcd;
using VecC = Eigen::VectorXcd;
using MatR = Eigen::MatrixXd;
using VecR = Eigen::VectorXd;
using Cplx = std::complex<double>;

// All scalar system constants. Powers and variances are linear (not dB).
struct SystemParams {
  int n_tx = 10;           // antennas serving the sensors
  int n_rx = 50;           // antennas serving the users
  int k_dl = 5;            // downlink users
  int k_ul = 3;            // uplink sensors
  double p_ap = 100.0;     // access-point transmit power
  double p_dl = 1.0;       // per-user pilot power
  int tau = 0;             // pilot length; 0 = auto (k_dl + n_tx)
  double alpha = 0.5;      // time split, harvesting fraction of the frame
  double eta = 0.5;        // energy conversion efficiency
  double sigma_n2 = 1.0;   // AWGN variance
  double sigma_si2 = 1.0;  // residual self-interference variance
  double r_ul_min = 0.0;   // uplink sum-rate floor (bits/s/Hz)

  int tau_effective() const { return tau > 0 ? tau : k_dl + n_tx; }

  void validate() const {
    auto fail = [](const std::string& msg) { throw config_error("SystemParams: " + msg); };
    if (n_tx < 1 || n_rx < 1 || k_dl < 1 || k_ul < 1) fail("antenna and node counts must be positive");
    if (!(p_ap > 0.0) || !(p_dl > 0.0)) fail("powers must be positive");
    if (!(sigma_n2 > 0.0) || !(sigma_si2 > 0.0)) fail("noise and SI variances must be positive");
    if (!(alpha >= 0.0 && alpha < 1.0)) fail("alpha must lie in [0, 1)");
    if (!(eta > 0.0 && eta < 1.0)) fail("eta must lie in (0, 1)");
    if (r_ul_min < 0.0) fail("r_ul_min must be nonnegative");
    if (tau_effective() < k_dl) fail("tau must be at least k_dl for orthogonal pilots");
    if (!std::isfinite(p_ap) || !std::isfinite(p_dl) || !std::isfinite(sigma_n2)) fail("non-finite parameter");
  }
};

// Large-scale gains. beta_dl_ul(k, m): user m -> sensor k.
// beta_ul_dl(k, m): sensor m -> user k.
struct PathLossProfile {
  VecR beta_ap_dl;  // k_dl entries, user k <-> AP
  VecR beta_ap_ul;  // k_ul entries, sensor k <-> AP
  MatR beta_dl_ul;  // k_ul x k_dl
  MatR beta_ul_dl;  // k_dl x k_ul

  static PathLossProfile ones(const SystemParams& p) {
    PathLossProfile out;
    out.beta_ap_dl = VecR::Ones(p.k_dl);
    out.beta_ap_ul = VecR::Ones(p.k_ul);
    out.beta_dl_ul = MatR::Ones(p.k_ul, p.k_dl);
    out.beta_ul_dl = MatR::Ones(p.k_dl, p.k_ul);
    return out;
  }

  void validate(const SystemParams& p) const {
    auto fail = [](const std::string& msg) { throw config_error("PathLossProfile: " + msg); };
    if (beta_ap_dl.size() != p.k_dl) fail("beta_ap_dl size mismatch");
    if (beta_ap_ul.size() != p.k_ul) fail("beta_ap_ul size mismatch");
    if (beta_dl_ul.rows() != p.k_ul || beta_dl_ul.cols() != p.k_dl) fail("beta_dl_ul shape mismatch");
    if (beta_ul_dl.rows() != p.k_dl || beta_ul_dl.cols() != p.k_ul) fail("beta_ul_dl shape mismatch");
    auto positive = [&fail](const auto& m, const char* name) {
      for (Eigen::Index i = 0; i < m.size(); ++i) {
        const double v = m(i);
        if (!(v > 0.0) || !std::isfinite(v)) fail(std::string(name) + " entries must be positive and finite");
      }
    };
    positive(beta_ap_dl, "beta_ap_dl");
    positive(beta_ap_ul, "beta_ap_ul");
    positive(beta_dl_ul, "beta_dl_ul");
    positive(beta_ul_dl, "beta_ul_dl");
  }
};

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

constexpr double kLn2 = 0.6931471805599453;

// log2(1 + x), stable for small x.
inline double log2_1p(double x) { return std::log1p(x) / kLn2; }

}  // namespace fdhap
