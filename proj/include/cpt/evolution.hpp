#pragma once

// Density-matrix propagation: Hamiltonian part, cascade relaxation 3->2->1->0,
// and pairwise pure dephasing, integrated with fixed-step classical RK4.

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpt/hamiltonian.hpp"
#include "cpt/model.hpp"

namespace cpt {

/// Default number of relative-phase samples in phase averaging.
inline constexpr int kDefaultPhases = 16;

/// Default negative eigenvalue beyond which propagation aborts.
inline constexpr double kPositivityHardTol = 1e-6;

struct IntegratorConfig {
  double dt = 0.01;        // ns
  int record_stride = 10;  // steps between recorded states
  bool positivity_check = true;
  /// Hard limit on -min eigenvalue of any recorded state.
  double positivity_tolerance = kPositivityHardTol;
  double rwa_cutoff_ghz = kDefaultRwaCutoffGhz;

  void validate() const;
};

/// A state left the physical cone by more than the hard tolerance.
class PositivityError : public std::runtime_error {
 public:
  PositivityError(double time_ns, double eigenvalue);
  double time() const { return time_; }
  double eigenvalue() const { return eigenvalue_; }

 private:
  double time_;
  double eigenvalue_;
};

struct IntegrationStats {
  int renormalizations = 0;   // drift-triggered re-Hermitize / trace fixes
  int positivity_warnings = 0;  // eigenvalues in (-1e-6, -1e-9)
};

struct Trajectory {
  std::vector<double> times;
  std::vector<DensityMatrix4> states;
  IntegrationStats stats;

  std::size_t size() const { return times.size(); }
  std::array<double, 4> populations(std::size_t i) const { return states[i].populations(); }
  /// Population of one level along the trajectory.
  std::vector<double> population_series(int level) const;
  const DensityMatrix4& final_state() const { return states.back(); }
};

/// Right-hand side of the master equation for a general Hamiltonian:
/// -i[H, rho] + cascade relaxation + pairwise pure dephasing.
Matrix4c master_equation_rhs(const Matrix4c& rho, const Matrix4c& h_t, const DecoherenceParams& dec);

/// Propagates rho0 from 0 to drive.t0, recording every record_stride steps and
/// the final state. Throws PositivityError on an unphysical state.
Trajectory propagate(const DensityMatrix4& rho0, const DeviceParams& device, const DriveParams& drive,
                     const DecoherenceParams& dec, const IntegratorConfig& cfg);

/// States at the requested times (ascending, each in [0, drive.t0]) for a single
/// relative phase. Each sample equals what propagate() returns for that end time.
std::vector<DensityMatrix4> states_at(const DensityMatrix4& rho0, const DeviceParams& device,
                                      const DriveParams& drive, const DecoherenceParams& dec,
                                      const IntegratorConfig& cfg, std::span<const double> times,
                                      IntegrationStats* stats = nullptr);

/// Relative phases drive.rel_phase + 2 pi k / n_phases, k = 0..n_phases-1.
std::vector<double> phase_samples(double base_phase, int n_phases);

/// Averages propagate() over the relative phase samples. The returned states are
/// the pointwise mean density matrices, summed in phase order.
Trajectory phase_averaged_populations(const DensityMatrix4& rho0, const DeviceParams& device,
                                      const DriveParams& drive, const DecoherenceParams& dec,
                                      const IntegratorConfig& cfg, int n_phases = kDefaultPhases);

/// Phase-averaged counterpart of states_at().
std::vector<DensityMatrix4> phase_averaged_states_at(const DensityMatrix4& rho0, const DeviceParams& device,
                                                     const DriveParams& drive, const DecoherenceParams& dec,
                                                     const IntegratorConfig& cfg, int n_phases,
                                                     std::span<const double> times,
                                                     IntegrationStats* stats = nullptr);

}  // namespace cpt
