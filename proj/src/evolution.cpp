#include "cpt/evolution.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpt {

void IntegratorConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ParameterError("integrator dt must be positive");
  if (record_stride < 1) throw ParameterError("integrator record_stride must be >= 1");
  if (!(positivity_tolerance >= 0.0)) throw ParameterError("integrator positivity_tolerance must be >= 0");
  if (!(rwa_cutoff_ghz > 0.0)) throw ParameterError("integrator rwa_cutoff_ghz must be positive");
}

namespace {

std::string positivity_message(double time_ns, double eigenvalue) {
  std::ostringstream msg;
  msg << "density matrix lost positivity at t = " << time_ns << " ns (min eigenvalue " << eigenvalue
      << "); the dephasing parameters are not completely positive";
  return msg.str();
}

}  // namespace

PositivityError::PositivityError(double time_ns, double eigenvalue)
    : std::runtime_error(positivity_message(time_ns, eigenvalue)), time_(time_ns), eigenvalue_(eigenvalue) {}

std::vector<double> Trajectory::population_series(int level) const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.population(level));
  return out;
}

Matrix4c master_equation_rhs(const Matrix4c& rho, const Matrix4c& h_t, const DecoherenceParams& dec) {
  const Complex minus_i(0.0, -1.0);
  Matrix4c out = minus_i * (h_t * rho - rho * h_t);
  for (int n = 1; n < 4; ++n) {
    const double gamma = dec.relaxation_rate(n);
    out(n, n) -= gamma * rho(n, n);
    out(n - 1, n - 1) += gamma * rho(n, n);
  }
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (i == j) continue;
      const double decay =
          0.5 * (dec.relaxation_rate(i) + dec.relaxation_rate(j)) + dec.dephasing_rate(i, j);
      out(i, j) -= decay * rho(i, j);
    }
  }
  return out;
}

namespace {

// Tridiagonal Hamiltonian snapshot: real diagonal and the (n, n+1) elements.
struct Tridiagonal {
  std::array<double, 4> diag{};
  std::array<Complex, 3> upper{};
};

struct BeatGroup {
  double beat = 0.0;
  std::array<Complex, 3> coeff{};
};

// RK4 engine specialised to nearest-neighbour couplings. The state is kept
// exactly Hermitian: only the upper triangle is computed and then mirrored.
class Rk4Engine {
 public:
  Rk4Engine(const RotatingFrameHamiltonian& h, const DecoherenceParams& dec, double rel_phase)
      : envelope_(h.envelope), t0_(h.t0) {
    for (int n = 0; n < 4; ++n) static_.diag[n] = h.static_part(n, n).real();
    for (int n = 0; n < 3; ++n) static_.upper[n] = h.static_part(n, n + 1);
    for (const BeatTerm& term : h.beat_terms) {
      auto it = std::find_if(groups_.begin(), groups_.end(),
                             [&](const BeatGroup& g) { return g.beat == term.beat; });
      if (it == groups_.end()) {
        groups_.push_back(BeatGroup{term.beat, {}});
        it = groups_.end() - 1;
      }
      it->coeff[term.lower] +=
          term.amplitude * std::polar(1.0, term.phase_offset + term.phase_sign * rel_phase);
    }
    for (int n = 0; n < 4; ++n) gamma_[n] = dec.relaxation_rate(n);
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        decay_(i, j) = i == j ? 0.0 : 0.5 * (gamma_[i] + gamma_[j]) + dec.dephasing_rate(i, j);
      }
    }
  }

  Tridiagonal hamiltonian(double t) const {
    Tridiagonal h = static_;
    for (const BeatGroup& g : groups_) {
      const Complex rot = std::polar(1.0, g.beat * t);
      for (int n = 0; n < 3; ++n) h.upper[n] += g.coeff[n] * rot;
    }
    const double env = envelope_.factor(t, t0_);
    if (env != 1.0) {
      for (auto& u : h.upper) u *= env;
    }
    return h;
  }

  void rhs(const Matrix4c& rho, const Tridiagonal& h, Matrix4c& out) const {
    const auto& d = h.diag;
    const auto& u = h.upper;
    for (int i = 0; i < 4; ++i) {
      for (int j = i; j < 4; ++j) {
        // [H, rho]_ij with H(k, k+1) = u[k], H(k+1, k) = conj(u[k]).
        Complex c = (d[i] - d[j]) * rho(i, j);
        if (i > 0) c += std::conj(u[i - 1]) * rho(i - 1, j);
        if (i < 3) c += u[i] * rho(i + 1, j);
        if (j > 0) c -= rho(i, j - 1) * u[j - 1];
        if (j < 3) c -= rho(i, j + 1) * std::conj(u[j]);
        if (i == j) {
          double v = c.imag();  // real part of -i c
          v -= gamma_[i] * rho(i, i).real();
          if (i < 3) v += gamma_[i + 1] * rho(i + 1, i + 1).real();
          out(i, i) = v;
        } else {
          const Complex v = Complex(c.imag(), -c.real()) - decay_(i, j) * rho(i, j);
          out(i, j) = v;
          out(j, i) = std::conj(v);
        }
      }
    }
  }

  // One RK4 step of length h from time t. `h_start` is H(t).
  void step(Matrix4c& rho, double h, const Tridiagonal& h_start, const Tridiagonal& h_mid,
            const Tridiagonal& h_end) const {
    Matrix4c k1, k2, k3, k4, tmp;
    rhs(rho, h_start, k1);
    tmp = rho + (0.5 * h) * k1;
    rhs(tmp, h_mid, k2);
    tmp = rho + (0.5 * h) * k2;
    rhs(tmp, h_mid, k3);
    tmp = rho + h * k3;
    rhs(tmp, h_end, k4);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }

 private:
  Envelope envelope_;
  double t0_;
  Tridiagonal static_;
  std::vector<BeatGroup> groups_;
  std::array<double, 4> gamma_{};
  Eigen::Matrix4d decay_;
};

// Splits a sample time into whole steps plus a remainder.
struct StepSplit {
  long long whole = 0;
  double remainder = 0.0;
};

StepSplit split_time(double t, double dt) {
  const double ratio = t / dt;
  const long long nearest = std::llround(ratio);
  if (std::abs(t - static_cast<double>(nearest) * dt) <= 1e-9 * dt) return {nearest, 0.0};
  const auto whole = static_cast<long long>(std::floor(ratio));
  return {whole, t - static_cast<double>(whole) * dt};
}

constexpr double kDriftTol = 1e-9;

void fix_drift(Matrix4c& rho, IntegrationStats& stats) {
  const double trace = rho.trace().real();
  const double herm = (rho - rho.adjoint()).cwiseAbs().maxCoeff();
  if (std::abs(trace - 1.0) <= kDriftTol && herm <= kDriftTol) return;
  rho = 0.5 * (rho + rho.adjoint());
  rho /= rho.trace().real();
  ++stats.renormalizations;
}

void check_positivity(const DensityMatrix4& state, double t, double tolerance, IntegrationStats& stats) {
  const double lowest = state.min_eigenvalue();
  if (lowest < -tolerance) throw PositivityError(t, lowest);
  if (lowest < -DensityMatrix4::kPositivityTol) ++stats.positivity_warnings;
}

std::vector<DensityMatrix4> integrate(const DensityMatrix4& rho0, const RotatingFrameHamiltonian& h,
                                      const DecoherenceParams& dec, const IntegratorConfig& cfg,
                                      double rel_phase, std::span<const double> times,
                                      IntegrationStats& stats) {
  const Rk4Engine engine(h, dec, rel_phase);
  const double dt = cfg.dt;
  std::vector<DensityMatrix4> out;
  out.reserve(times.size());

  Matrix4c rho = rho0.matrix();
  long long k = 0;
  Tridiagonal h_now = engine.hamiltonian(0.0);
  double previous = -1.0;
  for (double sample : times) {
    if (sample < previous) throw DomainError("sample times must be ascending");
    if (sample < 0.0 || sample > h.t0 * (1.0 + 1e-12) + 1e-12) {
      throw DomainError("sample time outside [0, t0]");
    }
    previous = sample;
    const StepSplit split = split_time(sample, dt);
    while (k < split.whole) {
      const Tridiagonal h_mid = engine.hamiltonian((static_cast<double>(k) + 0.5) * dt);
      const Tridiagonal h_end = engine.hamiltonian(static_cast<double>(k + 1) * dt);
      engine.step(rho, dt, h_now, h_mid, h_end);
      h_now = h_end;
      ++k;
      if (k % cfg.record_stride == 0) fix_drift(rho, stats);
    }
    if (split.remainder == 0.0) {
      out.emplace_back(rho);
    } else {
      const double t = static_cast<double>(k) * dt;
      Matrix4c partial = rho;
      engine.step(partial, split.remainder, h_now, engine.hamiltonian(t + 0.5 * split.remainder),
                  engine.hamiltonian(t + split.remainder));
      out.emplace_back(partial);
    }
    if (cfg.positivity_check) check_positivity(out.back(), sample, cfg.positivity_tolerance, stats);
  }
  return out;
}

std::vector<double> record_times(double t0, const IntegratorConfig& cfg) {
  const StepSplit total = split_time(t0, cfg.dt);
  std::vector<double> times;
  for (long long k = 0; k <= total.whole; k += cfg.record_stride) {
    times.push_back(static_cast<double>(k) * cfg.dt);
  }
  const bool final_recorded = total.remainder == 0.0 && total.whole % cfg.record_stride == 0;
  if (!final_recorded) times.push_back(t0);
  return times;
}

RotatingFrameHamiltonian hamiltonian_for(const DeviceParams& device, const DriveParams& drive,
                                         const IntegratorConfig& cfg) {
  cfg.validate();
  return build_hamiltonian(device, drive, angular_from_ghz(cfg.rwa_cutoff_ghz));
}

}  // namespace

std::vector<DensityMatrix4> states_at(const DensityMatrix4& rho0, const DeviceParams& device,
                                      const DriveParams& drive, const DecoherenceParams& dec,
                                      const IntegratorConfig& cfg, std::span<const double> times,
                                      IntegrationStats* stats) {
  dec.validate();
  const RotatingFrameHamiltonian h = hamiltonian_for(device, drive, cfg);
  IntegrationStats local;
  auto out = integrate(rho0, h, dec, cfg, drive.rel_phase, times, local);
  if (stats) {
    stats->renormalizations += local.renormalizations;
    stats->positivity_warnings += local.positivity_warnings;
  }
  return out;
}

Trajectory propagate(const DensityMatrix4& rho0, const DeviceParams& device, const DriveParams& drive,
                     const DecoherenceParams& dec, const IntegratorConfig& cfg) {
  cfg.validate();
  Trajectory traj;
  traj.times = record_times(drive.t0, cfg);
  traj.states = states_at(rho0, device, drive, dec, cfg, traj.times, &traj.stats);
  return traj;
}

std::vector<double> phase_samples(double base_phase, int n_phases) {
  if (n_phases < 1) throw ParameterError("n_phases must be >= 1");
  std::vector<double> phases;
  phases.reserve(static_cast<std::size_t>(n_phases));
  for (int k = 0; k < n_phases; ++k) {
    phases.push_back(normalize_phase(base_phase + kTwoPi * k / n_phases));
  }
  return phases;
}

std::vector<DensityMatrix4> phase_averaged_states_at(const DensityMatrix4& rho0, const DeviceParams& device,
                                                     const DriveParams& drive, const DecoherenceParams& dec,
                                                     const IntegratorConfig& cfg, int n_phases,
                                                     std::span<const double> times,
                                                     IntegrationStats* stats) {
  dec.validate();
  const RotatingFrameHamiltonian h = hamiltonian_for(device, drive, cfg);
  IntegrationStats local;
  std::vector<Matrix4c> sum;
  for (double phase : phase_samples(drive.rel_phase, n_phases)) {
    const auto states = integrate(rho0, h, dec, cfg, phase, times, local);
    if (sum.empty()) {
      for (const auto& s : states) sum.push_back(s.matrix());
    } else {
      for (std::size_t i = 0; i < states.size(); ++i) sum[i] += states[i].matrix();
    }
  }
  std::vector<DensityMatrix4> out;
  out.reserve(sum.size());
  for (auto& m : sum) out.emplace_back(m / static_cast<double>(n_phases));
  if (stats) {
    stats->renormalizations += local.renormalizations;
    stats->positivity_warnings += local.positivity_warnings;
  }
  return out;
}

Trajectory phase_averaged_populations(const DensityMatrix4& rho0, const DeviceParams& device,
                                      const DriveParams& drive, const DecoherenceParams& dec,
                                      const IntegratorConfig& cfg, int n_phases) {
  cfg.validate();
  Trajectory traj;
  traj.times = record_times(drive.t0, cfg);
  traj.states = phase_averaged_states_at(rho0, device, drive, dec, cfg, n_phases, traj.times, &traj.stats);
  return traj;
}

}  // namespace cpt
