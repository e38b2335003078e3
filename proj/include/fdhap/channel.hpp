#pragma once

#include <variant>

#include "fdhap/rng.hpp"
#include "fdhap/types.hpp"

namespace fdhap {

// One coherence-interval draw of every channel matrix.
// Conventions:
//   g_ap_dl (n_rx x k_dl): users -> AP, column k has per-entry variance beta_ap_dl[k]
//   h_si    (n_rx x n_tx): self-interference, per-entry variance sigma_si2
//   g_ap_ul (n_tx x k_ul): sensors -> AP
//   g_dl_ul (k_dl x k_ul): column k = channels from the users to sensor k
//   g_ul_dl (k_ul x k_dl): column k = channels from the sensors to user k
struct ChannelRealization {
  MatC g_ap_dl;
  MatC h_si;
  MatC g_ap_ul;
  MatC g_dl_ul;
  MatC g_ul_dl;
};

inline ChannelRealization draw_channels(const SystemParams& p, const PathLossProfile& losses, Rng& rng) {
  losses.validate(p);
  ChannelRealization c;
  c.g_ap_dl.resize(p.n_rx, p.k_dl);
  for (int k = 0; k < p.k_dl; ++k)
    for (int i = 0; i < p.n_rx; ++i) c.g_ap_dl(i, k) = rng.cgaussian(losses.beta_ap_dl[k]);
  c.h_si.resize(p.n_rx, p.n_tx);
  for (int j = 0; j < p.n_tx; ++j)
    for (int i = 0; i < p.n_rx; ++i) c.h_si(i, j) = rng.cgaussian(p.sigma_si2);
  c.g_ap_ul.resize(p.n_tx, p.k_ul);
  for (int k = 0; k < p.k_ul; ++k)
    for (int i = 0; i < p.n_tx; ++i) c.g_ap_ul(i, k) = rng.cgaussian(losses.beta_ap_ul[k]);
  c.g_dl_ul.resize(p.k_dl, p.k_ul);
  for (int k = 0; k < p.k_ul; ++k)
    for (int m = 0; m < p.k_dl; ++m) c.g_dl_ul(m, k) = rng.cgaussian(losses.beta_dl_ul(k, m));
  c.g_ul_dl.resize(p.k_ul, p.k_dl);
  for (int k = 0; k < p.k_dl; ++k)
    for (int m = 0; m < p.k_ul; ++m) c.g_ul_dl(m, k) = rng.cgaussian(losses.beta_ul_dl(k, m));
  return c;
}

inline ChannelRealization draw_channels(const SystemParams& p, const PathLossProfile& losses, RngStream stream) {
  Rng rng(stream);
  return draw_channels(p, losses, rng);
}

// Distance-based gain: ref_gain at ref_dist_m, decaying as d^-exponent.
struct DiskPathLossModel {
  double radius_m = 100.0;
  double exponent = 3.0;
  double ref_gain = 1.0;
  double ref_dist_m = 1.0;

  double gain_at(double dist_m) const {
    const double d = std::max(dist_m, ref_dist_m);
    return ref_gain * std::pow(d / ref_dist_m, -exponent);
  }
};

// Either explicit tables (passed through verbatim) or random node positions
// uniform on a disk around the AP with a power-law decay.
struct PathLossConfig {
  std::variant<PathLossProfile, DiskPathLossModel> model;
};

inline PathLossProfile sample_path_losses(const PathLossConfig& cfg, const SystemParams& p, Rng& rng) {
  if (std::holds_alternative<PathLossProfile>(cfg.model)) {
    const auto& table = std::get<PathLossProfile>(cfg.model);
    table.validate(p);
    return table;
  }
  const auto& disk = std::get<DiskPathLossModel>(cfg.model);
  if (!(disk.radius_m > 0.0) || !(disk.ref_gain > 0.0) || !(disk.ref_dist_m > 0.0))
    throw config_error("disk path-loss model: radius, reference gain and distance must be positive");

  // Uniform on the disk: radius scales like sqrt(u).
  auto draw_pos = [&rng, &disk](double& x, double& y) {
    const double r = disk.radius_m * std::sqrt(rng.uniform());
    const double a = 2.0 * M_PI * rng.uniform();
    x = r * std::cos(a);
    y = r * std::sin(a);
  };
  std::vector<std::pair<double, double>> users(p.k_dl), sensors(p.k_ul);
  for (auto& u : users) draw_pos(u.first, u.second);
  for (auto& s : sensors) draw_pos(s.first, s.second);

  auto dist = [](const std::pair<double, double>& a, const std::pair<double, double>& b) {
    return std::hypot(a.first - b.first, a.second - b.second);
  };
  const std::pair<double, double> ap{0.0, 0.0};

  PathLossProfile out;
  out.beta_ap_dl.resize(p.k_dl);
  for (int k = 0; k < p.k_dl; ++k) out.beta_ap_dl[k] = disk.gain_at(dist(ap, users[k]));
  out.beta_ap_ul.resize(p.k_ul);
  for (int k = 0; k < p.k_ul; ++k) out.beta_ap_ul[k] = disk.gain_at(dist(ap, sensors[k]));
  out.beta_dl_ul.resize(p.k_ul, p.k_dl);
  for (int k = 0; k < p.k_ul; ++k)
    for (int m = 0; m < p.k_dl; ++m) out.beta_dl_ul(k, m) = disk.gain_at(dist(sensors[k], users[m]));
  out.beta_ul_dl.resize(p.k_dl, p.k_ul);
  for (int k = 0; k < p.k_dl; ++k)
    for (int m = 0; m < p.k_ul; ++m) out.beta_ul_dl(k, m) = disk.gain_at(dist(users[k], sensors[m]));
  out.validate(p);
  return out;
}

}  // namespace fdhap
