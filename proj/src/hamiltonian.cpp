#include "cpt/hamiltonian.hpp"

#include <cmath>
#include <numbers>

namespace cpt {

RotatingFrameHamiltonian build_hamiltonian(const DeviceParams& device, const DriveParams& drive,
                                           double rwa_cutoff) {
  device.validate();
  drive.validate();

  RotatingFrameHamiltonian h;
  h.envelope = drive.envelope;
  h.t0 = drive.t0;

  // Differences are formed in GHz before scaling to keep exact zeros exact.
  const double f01 = device.f01;
  const double f12 = device.f12;
  const double f23 = device.f23();
  h.frame = {0.0, angular_from_ghz(drive.fp), angular_from_ghz(drive.fp + drive.fc),
             angular_from_ghz(2.0 * drive.fp + drive.fc)};
  h.static_part(1, 1) = angular_from_ghz(drive.fp - f01);
  h.static_part(2, 2) = angular_from_ghz((drive.fp - f01) + (drive.fc - f12));
  h.static_part(3, 3) = angular_from_ghz((drive.fp - f01) + (drive.fc - f12) + (drive.fp - f23));

  // Frame spacing of each transition in GHz: nu_{n+1} - nu_n.
  const std::array<double, 3> frame_step{drive.fp, drive.fc, drive.fp};

  // Field strengths referenced to the default dipole ratios, so that the
  // probe Rabi rate is quoted on 0-1 and the coupling rate on 1-2.
  const double probe_strength = drive.omega_p01;
  const double coupling_strength = drive.omega_c12 / std::numbers::sqrt2;

  struct Source {
    Field field;
    double freq_ghz;
    double strength;
  };
  const std::array<Source, 2> sources{Source{Field::probe, drive.fp, probe_strength},
                                      Source{Field::coupling, drive.fc, coupling_strength}};

  for (int n = 0; n < 3; ++n) {
    for (const Source& src : sources) {
      const double half_rabi = 0.5 * src.strength * device.dipole[static_cast<std::size_t>(n)];
      if (half_rabi == 0.0) continue;
      const int field_sign = src.field == Field::coupling ? 1 : 0;
      // Co-rotating (beat = step - f, phase -phi) and counter-rotating
      // (beat = step + f, phase +phi) components.
      const std::array<std::pair<double, int>, 2> components{
          std::pair{frame_step[static_cast<std::size_t>(n)] - src.freq_ghz, -field_sign},
          std::pair{frame_step[static_cast<std::size_t>(n)] + src.freq_ghz, field_sign}};
      for (const auto& [beat_ghz, phase_sign] : components) {
        const double beat = angular_from_ghz(beat_ghz);
        if (std::abs(beat) > rwa_cutoff) continue;
        if (beat == 0.0 && phase_sign == 0) {
          h.static_part(n, n + 1) += half_rabi;
          h.static_part(n + 1, n) += half_rabi;
          continue;
        }
        BeatTerm term;
        term.matrix = Matrix4c::Zero();
        term.matrix(n, n + 1) = half_rabi;
        term.lower = n;
        term.amplitude = half_rabi;
        term.beat = beat;
        term.phase_offset = 0.0;
        term.phase_sign = phase_sign;
        term.field = src.field;
        h.beat_terms.push_back(term);
      }
    }
  }
  return h;
}

Matrix4c evaluate_at(const RotatingFrameHamiltonian& h, double t, double rel_phase) {
  const double env = h.envelope.factor(t, h.t0);
  Matrix4c out = h.static_part;
  if (env != 1.0) {
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        if (i != j) out(i, j) *= env;
      }
    }
  }
  for (const BeatTerm& term : h.beat_terms) {
    const Complex phase = std::polar(env, term.beat * t + term.phase_offset + term.phase_sign * rel_phase);
    const Matrix4c contrib = term.matrix * phase;
    out += contrib + contrib.adjoint();
  }
  return out;
}

}  // namespace cpt
