#pragma once

// Rotating-frame Hamiltonian of the two-tone driven four-level ladder.
//
// Level n rotates at the frame frequency nu_n = (0, wp, wp + wc, 2 wp + wc).
// In that frame the probe on 0-1 and 2-3 and the coupling field on 1-2 are
// static; the cross couplings (coupling field on 0-1 and 2-3, probe on 1-2)
// oscillate at the beat +-(wp - wc). Components faster than the RWA cutoff
// (the counter-rotating ones at ~12 GHz) are dropped.
//
// Sign convention: the diagonal holds nu_n - w_n, and the (n, n+1) element of
// a field with phase phi reads (Omega_n / 2) exp(i (beta t - phi)). This is the
// complex conjugate of the textbook frame up to a sign flip of levels 1 and 3,
// so populations are unchanged.

#include <array>
#include <vector>

#include "cpt/model.hpp"

namespace cpt {

enum class Field { probe, coupling };

/// Default RWA cutoff: components oscillating faster than 2 GHz are dropped.
inline constexpr double kDefaultRwaCutoffGhz = 2.0;

/// One time-dependent contribution term * exp(i (beat t + phase_offset + phase_sign * rel_phase)) + h.c.
struct BeatTerm {
  Matrix4c matrix;  // strictly upper triangular, a single (lower, lower + 1) entry
  int lower = 0;    // transition lower <-> lower + 1
  double amplitude = 0.0;  // |matrix(lower, lower + 1)|, rad/ns
  double beat = 0.0;       // rad/ns
  double phase_offset = 0.0;
  int phase_sign = 0;  // multiplier of the relative phase; 0 for probe terms
  Field field = Field::probe;
};

struct RotatingFrameHamiltonian {
  /// Frame detunings on the diagonal plus the phase-free static couplings, rad/ns.
  Matrix4c static_part = Matrix4c::Zero();
  std::vector<BeatTerm> beat_terms;
  /// Frame frequencies nu_n, rad/ns.
  std::array<double, 4> frame{};
  Envelope envelope;
  double t0 = 0.0;

  std::array<double, 4> detunings() const {
    return {static_part(0, 0).real(), static_part(1, 1).real(), static_part(2, 2).real(),
            static_part(3, 3).real()};
  }
};

/// Builds the rotating-frame Hamiltonian. `rwa_cutoff` is in rad/ns.
RotatingFrameHamiltonian build_hamiltonian(const DeviceParams& device, const DriveParams& drive,
                                           double rwa_cutoff = angular_from_ghz(kDefaultRwaCutoffGhz));

/// H(t) for the given relative phase of the coupling field.
Matrix4c evaluate_at(const RotatingFrameHamiltonian& h, double t, double rel_phase);

}  // namespace cpt
