#pragma once

#include <sstream>

#include "fdhap/types.hpp"

namespace fdhap {

// Pilot and energy training sequences for one frame.
// pilots (k_dl x tau): orthonormal rows, pilots * pilots^H = I.
// energy_seq (n_tx x tau): rows of squared norm tau, (1/tau) * energy_seq * energy_seq^H = I,
// and energy_seq * pilots^H = 0. p_pilot = tau * p_dl is the per-pilot-row energy.
struct TrainingDesign {
  MatC pilots;
  MatC energy_seq;
  double p_pilot = 0.0;
};

// Rows of a size-tau DFT unitary host both sequences exactly orthogonally.
// Requires tau >= k_dl + n_tx; the weaker pilot-only condition tau >= k_dl
// cannot accommodate the energy rows.
inline TrainingDesign design_training(const SystemParams& p) {
  const int tau = p.tau_effective();
  if (tau < p.k_dl + p.n_tx) {
    std::ostringstream msg;
    msg << "training design needs tau >= k_dl + n_tx (" << p.k_dl + p.n_tx << "), got tau = " << tau;
    throw infeasible_training_error(msg.str());
  }
  TrainingDesign d;
  d.pilots.resize(p.k_dl, tau);
  d.energy_seq.resize(p.n_tx, tau);
  const double inv_sqrt_tau = 1.0 / std::sqrt(static_cast<double>(tau));
  auto dft_entry = [tau, inv_sqrt_tau](int row, int col) {
    const double angle = -2.0 * M_PI * static_cast<double>(row) * static_cast<double>(col) / tau;
    return Cplx(std::cos(angle), std::sin(angle)) * inv_sqrt_tau;
  };
  for (int r = 0; r < p.k_dl; ++r)
    for (int c = 0; c < tau; ++c) d.pilots(r, c) = dft_entry(r, c);
  const double sqrt_tau = std::sqrt(static_cast<double>(tau));
  for (int r = 0; r < p.n_tx; ++r)
    for (int c = 0; c < tau; ++c) d.energy_seq(r, c) = sqrt_tau * dft_entry(p.k_dl + r, c);
  d.p_pilot = tau * p.p_dl;
  return d;
}

}  // namespace fdhap
