#include <doctest.h>

#include <cmath>

#include "cpt/model.hpp"

using namespace cpt;

TEST_SUITE("model") {

TEST_CASE("anharmonicity") {
  DeviceParams d;
  CHECK(delta(d) == doctest::Approx(0.170).epsilon(1e-12));
  d.f01 = 6.19;
  d.f12 = 5.85;
  CHECK(delta(d) == doctest::Approx(0.170).epsilon(1e-12));
  d.f01 = d.f12 = 5.0;
  CHECK_THROWS_AS(delta(d), ParameterError);

  DeviceParams a, b;
  b.f01 = a.f01 + 0.25;
  b.f12 = a.f12 + 0.25;
  CHECK(delta(b) == doctest::Approx(delta(a)).epsilon(1e-14));
}

TEST_CASE("f23 and t1_32 defaults") {
  DeviceParams d;
  CHECK(d.f23() == doctest::Approx(2 * 5.865 - 6.205));
  d.f23_override = 5.4;
  CHECK(d.f23() == 5.4);
  DecoherenceParams dec;
  CHECK(dec.t1_32() == doctest::Approx(77.0 * 2.0 / 3.0));
}

TEST_CASE("two-photon amplitude") {
  const double omega = angular_from_mhz(48.0);
  CHECK(mhz_from_angular(two_photon_amplitude(omega, 0.170)) == doctest::Approx(6.776).epsilon(1e-3));
  CHECK(two_photon_amplitude(0.0, 0.170) == 0.0);
  CHECK(mhz_from_angular(two_photon_amplitude(omega, 0.340)) == doctest::Approx(3.388).epsilon(1e-3));
  CHECK_THROWS_AS(two_photon_amplitude(omega, 0.0), DomainError);
  CHECK(two_photon_perturbative(omega, 0.170));
  CHECK_FALSE(two_photon_perturbative(angular_from_mhz(100.0), 0.170));
}

TEST_CASE("intermediate leakage") {
  const double omega = angular_from_mhz(48.0);
  CHECK(intermediate_leakage(omega, 0.170) == doctest::Approx(0.0399).epsilon(2e-3));
  CHECK(intermediate_leakage(0.0, 0.3) == 0.0);
  CHECK(intermediate_leakage(omega, 0.340) == doctest::Approx(intermediate_leakage(omega, 0.170) / 4));
}

TEST_CASE("dark state") {
  auto s = dark_state(0.0, 1.0);
  CHECK(std::abs(s[0] - Complex(1, 0)) < 1e-15);
  CHECK(std::abs(s[1]) < 1e-15);

  s = dark_state(1.0, 1.0);
  CHECK(s[0].real() == doctest::Approx(1 / std::sqrt(2.0)));
  CHECK(s[1].real() == doctest::Approx(-1 / std::sqrt(2.0)));

  s = dark_state(angular_from_mhz(6.8), angular_from_mhz(32.0));
  CHECK(s[0].real() == doctest::Approx(0.978).epsilon(1e-3));
  CHECK(s[1].real() == doctest::Approx(-0.208).epsilon(5e-3));

  const auto a = dark_state(Complex(0.3, 0.1), Complex(-0.2, 0.7));
  const auto b = dark_state(Complex(0.3, 0.1) * 5.0, Complex(-0.2, 0.7) * 5.0);
  CHECK(std::norm(a[0]) + std::norm(a[1]) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(a[0] - b[0]) < 1e-12);
  CHECK(std::abs(a[1] - b[1]) < 1e-12);
  CHECK_THROWS_AS(dark_state(0.0, 0.0), DomainError);
}

TEST_CASE("coherence rates") {
  DecoherenceParams dec;
  dec.t1_21 = 77;
  dec.tphi_02 = 6;
  CHECK(mhz_from_angular(dec.gamma_02()) == doctest::Approx(27.5).epsilon(0.3 / 27.5));
  dec.tphi_01 = kInfiniteTime;
  CHECK(dec.gamma_01() == doctest::Approx(0.5 / 108.0));
  CHECK(dec.dephasing_rate(0, 1) == 0.0);
}

TEST_CASE("level 3 dephasing follows level 2 unless overridden") {
  DecoherenceParams dec;
  CHECK(dec.dephasing_rate(0, 3) == dec.dephasing_rate(0, 2));
  CHECK(dec.dephasing_rate(1, 3) == dec.dephasing_rate(1, 2));
  CHECK(dec.dephasing_rate(2, 3) == 0.0);
  dec.tphi_3x_override = 10.0;
  CHECK(dec.dephasing_rate(2, 3) == doctest::Approx(0.1));
  CHECK(dec.dephasing_rate(3, 0) == doctest::Approx(0.1));
}

TEST_CASE("complete positivity of pairwise dephasing") {
  DecoherenceParams dec;
  dec.tphi_01 = dec.tphi_02 = dec.tphi_12 = 20.0;
  CHECK(dec.dephasing_completely_positive());
  // 30/6/30: sqrt(1/6) > 2 sqrt(1/30)
  dec.tphi_01 = 30;
  dec.tphi_02 = 6;
  dec.tphi_12 = 30;
  CHECK_FALSE(dec.dephasing_completely_positive());
}

TEST_CASE("parameter validation") {
  DecoherenceParams dec;
  dec.t1_10 = -1;
  CHECK_THROWS_AS(dec.validate(), ParameterError);
  dec.t1_10 = kInfiniteTime;
  CHECK_NOTHROW(dec.validate());

  DriveParams drive;
  drive.omega_p01 = -1;
  CHECK_THROWS_AS(drive.validate(), ParameterError);

  MeasurementModel m;
  CHECK_NOTHROW(m.validate());
  m.fidelity = 0.99;
  CHECK_THROWS_AS(m.validate(), ParameterError);
}

TEST_CASE("envelope") {
  Envelope e;
  CHECK(e.factor(3.0, 10.0) == 1.0);
  e.shape = EnvelopeShape::linear_ramp;
  e.ramp_ns = 2.0;
  CHECK(e.factor(0.0, 10.0) == 0.0);
  CHECK(e.factor(1.0, 10.0) == doctest::Approx(0.5));
  CHECK(e.factor(5.0, 10.0) == 1.0);
  CHECK(e.factor(9.5, 10.0) == doctest::Approx(0.25));
}

TEST_CASE("density matrix") {
  const DensityMatrix4 g;
  CHECK(g.population(0) == 1.0);
  CHECK(g.is_physical());
  Eigen::Vector4cd psi(1.0, Complex(0, 1), 0.0, 0.0);
  const auto p = DensityMatrix4::pure(psi);
  CHECK(p.trace() == doctest::Approx(1.0));
  CHECK(p.min_eigenvalue() > -1e-12);
  Matrix4c bad = Matrix4c::Zero();
  bad(0, 0) = 1.5;
  bad(1, 1) = -0.5;
  CHECK_FALSE(DensityMatrix4(bad).is_physical());
  CHECK(normalize_phase(-std::numbers::pi / 2) == doctest::Approx(1.5 * std::numbers::pi));
}

}
