#pragma once

// Physical parameters and state types for the driven four-level artificial atom.
//
// Units: frequencies are given in GHz at this boundary, decoherence times in ns.
// Everything below the model layer (Hamiltonian, integrator) works in angular
// units of rad/ns, so 1 GHz corresponds to 2*pi rad/ns.

#include <array>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace cpt {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Sentinel for an infinitely long time; the corresponding rate is exactly zero.
inline constexpr double kInfiniteTime = std::numeric_limits<double>::infinity();

/// GHz -> rad/ns.
constexpr double angular_from_ghz(double ghz) { return kTwoPi * ghz; }
/// MHz -> rad/ns.
constexpr double angular_from_mhz(double mhz) { return kTwoPi * mhz * 1e-3; }
/// rad/ns -> MHz, i.e. rate / (2 pi) * 1e3.
constexpr double mhz_from_angular(double rad_per_ns) { return rad_per_ns / kTwoPi * 1e3; }

/// Rate in ns^-1 for a time in ns; an infinite time gives a zero rate.
constexpr double rate_from_time(double t_ns) { return 1.0 / t_ns; }

/// Raised when an argument lies outside the domain of a formula.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Raised when a parameter set violates its invariants.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

using Matrix4c = Eigen::Matrix4cd;
using Complex = std::complex<double>;

struct DeviceParams {
  static constexpr int kLevels = 4;

  double f01 = 6.205;  // GHz
  double f12 = 5.865;  // GHz
  /// Defaults to 2*f12 - f01 (linear continuation of the anharmonic ladder).
  std::optional<double> f23_override;
  /// Relative dipole matrix elements of the 0-1, 1-2 and 2-3 transitions.
  std::array<double, 3> dipole{1.0, std::numbers::sqrt2, std::numbers::sqrt3};

  double delta() const { return 0.5 * (f01 - f12); }
  double f02() const { return f01 + f12; }
  double f23() const { return f23_override.value_or(2.0 * f12 - f01); }

  /// Throws ParameterError unless f01 > f12 > 0 and f23 > 0.
  void validate() const;
};

enum class EnvelopeShape { rectangular, linear_ramp };

/// Pulse envelope. A linear ramp rises over ramp_ns, holds, and falls over
/// ramp_ns before t0 (a trapezoid).
struct Envelope {
  EnvelopeShape shape = EnvelopeShape::rectangular;
  double ramp_ns = 0.0;

  /// Amplitude factor in [0, 1] at time t for a pulse of duration t0.
  double factor(double t, double t0) const;
  bool is_rectangular() const { return shape == EnvelopeShape::rectangular || ramp_ns <= 0.0; }
};

struct DriveParams {
  double fp = 6.035;      // probe frequency, GHz
  double fc = 5.865;      // coupling frequency, GHz
  double omega_p01 = 0.0; // resonant probe Rabi rate on 0-1, rad/ns
  double omega_c12 = 0.0; // resonant coupling Rabi rate on 1-2, rad/ns
  double rel_phase = 0.0; // radians, coupling field relative to probe
  double t0 = 30.0;       // ns
  Envelope envelope;

  /// Probe Rabi rate on 1-2 for the default dipole ratios.
  double omega_p12() const { return std::numbers::sqrt2 * omega_p01; }

  void validate() const;
};

/// Wraps an angle into [0, 2 pi).
double normalize_phase(double radians);

/// Energy-relaxation and pure-dephasing times in ns. Any entry may be
/// kInfiniteTime, which removes the corresponding channel.
struct DecoherenceParams {
  double t1_10 = 108.0;
  double t1_21 = 77.0;
  std::optional<double> t1_32_override;  // default (2/3) * t1_21
  double tphi_01 = 30.0;
  double tphi_02 = 6.0;
  double tphi_12 = 30.0;
  /// Single pure-dephasing time for every coherence involving level 3. When
  /// unset, level 3 dephases together with level 2: the 0-3 and 1-3 pairs use
  /// the 0-2 and 1-2 rates and the 2-3 pair has no pure dephasing.
  std::optional<double> tphi_3x_override;

  double t1_32() const { return t1_32_override.value_or(2.0 / 3.0 * t1_21); }

  /// Total decay rate out of level n (ns^-1); level 0 is stable.
  double relaxation_rate(int level) const;
  /// Pure-dephasing rate of the coherence between levels i != j (ns^-1).
  double dephasing_rate(int i, int j) const;

  /// True when the pairwise pure-dephasing rates form a completely positive
  /// generator, i.e. the rate matrix is conditionally negative semidefinite.
  /// Pairwise rates that violate sqrt(g02) <= sqrt(g01) + sqrt(g12) fail this.
  bool dephasing_completely_positive(double tol = 1e-12) const;

  /// 1/(2 T1^(1->0)) + 1/Tphi^(01), ns^-1.
  double gamma_01() const { return 0.5 * rate_from_time(t1_10) + rate_from_time(tphi_01); }
  /// 1/(2 T1^(2->1)) + 1/Tphi^(02), ns^-1.
  double gamma_02() const { return 0.5 * rate_from_time(t1_21) + rate_from_time(tphi_02); }

  void validate() const;
};

/// Four-level density matrix. Invariants are checked on demand, not enforced
/// on every write, because the integrator works on raw matrices.
class DensityMatrix4 {
 public:
  static constexpr double kHermiticityTol = 1e-12;
  static constexpr double kTraceTol = 1e-9;
  static constexpr double kPositivityTol = 1e-9;

  DensityMatrix4() : rho_(Matrix4c::Zero()) { rho_(0, 0) = 1.0; }
  explicit DensityMatrix4(const Matrix4c& rho) : rho_(rho) {}

  /// |n><n|.
  static DensityMatrix4 basis(int n);
  /// |psi><psi| for a (not necessarily normalized) state vector.
  static DensityMatrix4 pure(const Eigen::Vector4cd& psi);

  const Matrix4c& matrix() const { return rho_; }
  Matrix4c& matrix() { return rho_; }
  Complex operator()(int i, int j) const { return rho_(i, j); }

  double population(int n) const { return rho_(n, n).real(); }
  std::array<double, 4> populations() const;
  double trace() const { return rho_.trace().real(); }
  /// max |rho - rho^dagger| elementwise.
  double hermiticity_error() const;
  double min_eigenvalue() const;

  /// True when Hermiticity, unit trace and positivity all hold at the default tolerances.
  bool is_physical() const;

 private:
  Matrix4c rho_;
};

struct MeasurementModel {
  double fidelity = 0.80;
  double background = 0.03;
  int trials = 4000;

  void validate() const;
};

// --- Closed-form relations of the Lambda system ---------------------------

/// Anharmonicity (f01 - f12)/2 in GHz.
double delta(const DeviceParams& device);

/// Effective two-photon probe amplitude omega^2 / (2 * 2 pi delta), rad/ns.
/// `delta_ghz` must be positive.
double two_photon_amplitude(double omega_p01, double delta_ghz);

/// True when omega_p01 / (2 pi delta) < 0.5, the regime where the virtual
/// two-photon picture holds.
bool two_photon_perturbative(double omega_p01, double delta_ghz);

/// Population parked in the intermediate level by the detuned probe,
/// omega^2 / (2 (2 pi delta)^2).
double intermediate_leakage(double omega_p01, double delta_ghz);

/// Dark superposition (a_c |0> - a_p |1>) / sqrt(|a_p|^2 + |a_c|^2).
std::array<Complex, 2> dark_state(Complex a_p, Complex a_c);

}  // namespace cpt
