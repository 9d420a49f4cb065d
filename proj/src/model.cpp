#include "cpt/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace cpt {

namespace {

void require_positive_time(const char* name, double value) {
  if (!(value > 0.0)) {
    std::ostringstream msg;
    msg << name << " must be strictly positive (got " << value << " ns)";
    throw ParameterError(msg.str());
  }
}

}  // namespace

void DeviceParams::validate() const {
  if (!(f12 > 0.0) || !(f01 > f12)) {
    std::ostringstream msg;
    msg << "device requires f01 > f12 > 0 (got f01=" << f01 << ", f12=" << f12 << " GHz)";
    throw ParameterError(msg.str());
  }
  if (!(f23() > 0.0)) {
    throw ParameterError("device f23 must be positive (got " + std::to_string(f23()) + " GHz)");
  }
  for (double d : dipole) {
    if (!(d >= 0.0)) throw ParameterError("dipole factors must be nonnegative");
  }
}

double Envelope::factor(double t, double t0) const {
  if (is_rectangular()) return 1.0;
  // Ramps are shortened symmetrically when the pulse is too short to hold.
  const double ramp = std::min(ramp_ns, 0.5 * t0);
  if (ramp <= 0.0) return 1.0;
  if (t < ramp) return std::max(0.0, t / ramp);
  if (t > t0 - ramp) return std::max(0.0, (t0 - t) / ramp);
  return 1.0;
}

void DriveParams::validate() const {
  if (!(omega_p01 >= 0.0) || !(omega_c12 >= 0.0)) {
    throw ParameterError("drive Rabi rates must be nonnegative");
  }
  if (!(t0 >= 0.0) || !std::isfinite(t0)) {
    throw ParameterError("drive duration t0 must be finite and nonnegative");
  }
  if (!(fp > 0.0) || !(fc > 0.0)) {
    throw ParameterError("drive frequencies must be positive");
  }
  if (envelope.shape == EnvelopeShape::linear_ramp && !(envelope.ramp_ns >= 0.0)) {
    throw ParameterError("envelope ramp must be nonnegative");
  }
}

double normalize_phase(double radians) {
  double wrapped = std::fmod(radians, kTwoPi);
  if (wrapped < 0.0) wrapped += kTwoPi;
  if (wrapped >= kTwoPi) wrapped = 0.0;
  return wrapped;
}

double DecoherenceParams::relaxation_rate(int level) const {
  switch (level) {
    case 1: return rate_from_time(t1_10);
    case 2: return rate_from_time(t1_21);
    case 3: return rate_from_time(t1_32());
    default: return 0.0;
  }
}

double DecoherenceParams::dephasing_rate(int i, int j) const {
  if (i == j) return 0.0;
  const int lo = std::min(i, j);
  const int hi = std::max(i, j);
  if (hi == 3) {
    if (tphi_3x_override) return rate_from_time(*tphi_3x_override);
    if (lo == 2) return 0.0;
    return dephasing_rate(lo, 2);
  }
  if (lo == 0 && hi == 1) return rate_from_time(tphi_01);
  if (lo == 0 && hi == 2) return rate_from_time(tphi_02);
  return rate_from_time(tphi_12);
}

void DecoherenceParams::validate() const {
  require_positive_time("t1_10", t1_10);
  require_positive_time("t1_21", t1_21);
  require_positive_time("t1_32", t1_32());
  require_positive_time("tphi_01", tphi_01);
  require_positive_time("tphi_02", tphi_02);
  require_positive_time("tphi_12", tphi_12);
  if (tphi_3x_override) require_positive_time("tphi_3x", *tphi_3x_override);
}

bool DecoherenceParams::dephasing_completely_positive(double tol) const {
  Eigen::Matrix4d rates;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) rates(i, j) = dephasing_rate(i, j);
  }
  // Project onto the sum-zero subspace; -P R P must be positive semidefinite.
  const Eigen::Matrix4d proj = Eigen::Matrix4d::Identity() - Eigen::Matrix4d::Constant(0.25);
  const Eigen::Matrix4d form = -proj * rates * proj;
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> solver(form, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff() >= -tol;
}

DensityMatrix4 DensityMatrix4::basis(int n) {
  Matrix4c rho = Matrix4c::Zero();
  rho(n, n) = 1.0;
  return DensityMatrix4(rho);
}

DensityMatrix4 DensityMatrix4::pure(const Eigen::Vector4cd& psi) {
  const Eigen::Vector4cd v = psi.normalized();
  return DensityMatrix4(v * v.adjoint());
}

std::array<double, 4> DensityMatrix4::populations() const {
  return {population(0), population(1), population(2), population(3)};
}

double DensityMatrix4::hermiticity_error() const {
  return (rho_ - rho_.adjoint()).cwiseAbs().maxCoeff();
}

double DensityMatrix4::min_eigenvalue() const {
  const Matrix4c herm = 0.5 * (rho_ + rho_.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix4c> solver(herm, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

bool DensityMatrix4::is_physical() const {
  return hermiticity_error() <= kHermiticityTol && std::abs(trace() - 1.0) <= kTraceTol &&
         min_eigenvalue() >= -kPositivityTol;
}

void MeasurementModel::validate() const {
  if (!(background >= 0.0) || !(fidelity >= 0.0) || !(fidelity + background <= 1.0)) {
    throw ParameterError("measurement requires background >= 0 and fidelity + background <= 1");
  }
  if (trials < 1) throw ParameterError("measurement requires at least one trial");
}

double delta(const DeviceParams& device) {
  device.validate();
  return device.delta();
}

double two_photon_amplitude(double omega_p01, double delta_ghz) {
  if (!(delta_ghz > 0.0)) throw DomainError("two_photon_amplitude requires delta > 0");
  return omega_p01 * omega_p01 / (2.0 * angular_from_ghz(delta_ghz));
}

bool two_photon_perturbative(double omega_p01, double delta_ghz) {
  if (!(delta_ghz > 0.0)) throw DomainError("two_photon_perturbative requires delta > 0");
  return omega_p01 / angular_from_ghz(delta_ghz) < 0.5;
}

double intermediate_leakage(double omega_p01, double delta_ghz) {
  if (!(delta_ghz > 0.0)) throw DomainError("intermediate_leakage requires delta > 0");
  const double detuning = angular_from_ghz(delta_ghz);
  return omega_p01 * omega_p01 / (2.0 * detuning * detuning);
}

std::array<Complex, 2> dark_state(Complex a_p, Complex a_c) {
  const double norm = std::sqrt(std::norm(a_p) + std::norm(a_c));
  if (norm == 0.0) throw DomainError("dark_state requires a nonzero probe or coupling amplitude");
  return {a_c / norm, -a_p / norm};
}

}  // namespace cpt
