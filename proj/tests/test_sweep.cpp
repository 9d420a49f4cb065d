#include <doctest.h>

#include "cpt/sweep.hpp"

using namespace cpt;

namespace {

SimulationContext small_context() {
  SimulationContext c;
  c.drive.fp = 6.035;
  c.drive.fc = 5.865;
  c.drive.omega_p01 = angular_from_mhz(48);
  c.drive.omega_c12 = angular_from_mhz(32);
  c.drive.t0 = 4;
  c.decoherence.tphi_02 = 12;
  c.n_phases = 4;
  c.integrator.dt = 0.02;
  return c;
}

SweepSpec small_spec() {
  SweepSpec s;
  s.axis1 = {Axis::fp, 6.00, 6.06, 4};
  s.axis2 = AxisSpec{Axis::fc, 5.80, 5.90, 3};
  s.context = small_context();
  return s;
}

}  // namespace

TEST_SUITE("sweep") {

TEST_CASE("axis grid") {
  const AxisSpec a{Axis::fc, 5.72, 6.00, 61};
  const auto v = a.values();
  CHECK(v.size() == 61);
  CHECK(v.front() == 5.72);
  CHECK(v.back() == 6.00);
  CHECK(a.step() == doctest::Approx(0.28 / 60));
  CHECK(parse_axis("t0") == Axis::t0);
  CHECK(axis_name(Axis::fp) == "fp");
  CHECK_THROWS(parse_axis("tphi"));
}

TEST_CASE("zero drive gives zero P2") {
  SweepSpec s = small_spec();
  s.axis1.n_points = 2;
  s.axis2->n_points = 2;
  s.context.drive.omega_p01 = s.context.drive.omega_c12 = 0;
  const auto r = run_sweep(s);
  CHECK(r.p2.rows() == 2);
  CHECK(r.p2.cols() == 2);
  CHECK(r.p2.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("invalid specs are rejected") {
  SweepSpec s = small_spec();
  s.axis2->id = Axis::fp;
  CHECK_THROWS_AS(run_sweep(s), ParameterError);
  s = small_spec();
  s.axis1.n_points = 1;
  CHECK_THROWS_AS(run_sweep(s), ParameterError);
  s = small_spec();
  s.shot_noise = true;
  CHECK_THROWS_AS(run_sweep(s), ParameterError);
}

TEST_CASE("results do not depend on the worker count") {
  SweepSpec s = small_spec();
  s.measurement = MeasurementModel{};
  s.shot_noise = true;
  s.rng_seed = 7;
  s.jobs = 1;
  const auto a = run_sweep(s);
  s.jobs = 4;
  const auto b = run_sweep(s);
  CHECK(a.p2 == b.p2);
  CHECK(a.p1 == b.p1);
  CHECK(a.p3 == b.p3);
  s.rng_seed = 8;
  const auto c = run_sweep(s);
  CHECK(a.p2 != c.p2);
}

TEST_CASE("point streams are independent of traversal order") {
  auto r1 = point_rng(7, 5);
  auto r2 = point_rng(7, 5);
  auto r3 = point_rng(7, 6);
  const auto x = r1();
  CHECK(x == r2());
  CHECK(x != r3());
}

TEST_CASE("duration axis matches independent runs") {
  SimulationContext c = small_context();
  const double t0s[] = {4.0, 0.0, 2.5, 1.005};
  const auto batched = populations_vs_duration(c, t0s);
  for (std::size_t i = 0; i < 4; ++i) {
    SimulationContext one = c;
    one.drive.t0 = t0s[i];
    const double single[] = {t0s[i]};
    const auto p = populations_vs_duration(one, single);
    CHECK(p[0] == batched[i]);
  }
  CHECK(batched[1][0] == 1.0);

  c.drive.envelope = {EnvelopeShape::linear_ramp, 1.0};
  const auto ramped = populations_vs_duration(c, t0s);
  CHECK(ramped[0][2] != batched[0][2]);
}

TEST_CASE("2-D sweep with a duration axis") {
  SweepSpec s;
  s.axis1 = {Axis::fc, 5.80, 5.90, 3};
  s.axis2 = AxisSpec{Axis::t0, 0.0, 4.0, 5};
  s.context = small_context();
  const auto r = run_sweep(s);
  CHECK(r.p2.col(0).cwiseAbs().maxCoeff() == 0.0);

  SimulationContext one = s.context;
  one.drive.fc = 5.85;
  const double t[] = {3.0};
  CHECK(r.p2(1, 3) == populations_vs_duration(one, t)[0][2]);
}

TEST_CASE("cuts") {
  SweepResult r;
  r.axis1 = {Axis::fp, 1.0, 2.0, 2};
  r.axis2 = AxisSpec{Axis::fc, 3.0, 4.0, 2};
  r.axis1_values = r.axis1.values();
  r.axis2_values = r.axis2->values();
  r.p2 = Eigen::MatrixXd::Constant(2, 2, 0.25);
  r.p1 = r.p3 = Eigen::MatrixXd::Zero(2, 2);
  const Series s = cut(r, Axis::fc, 3.1);
  CHECK(s.axis == Axis::fp);
  CHECK(s.fixed_value == 3.0);
  CHECK(s.y == std::vector<double>{0.25, 0.25});

  r.p2(1, 0) = 0.5;
  const Series by_fp = cut(r, Axis::fp, 1.9);
  CHECK(by_fp.axis == Axis::fc);
  CHECK(by_fp.y == std::vector<double>{0.5, 0.25});

  CHECK_THROWS_AS(cut(r, Axis::fc, 4.5), DomainError);
  CHECK_THROWS_AS(cut(r, Axis::t0, 1.0), DomainError);
  r.axis2.reset();
  CHECK_THROWS_AS(cut(r, Axis::fp, 1.0), DomainError);
}

TEST_CASE("the lowest failing point is reported") {
  SweepSpec s = small_spec();
  s.axis2.reset();
  s.axis1 = {Axis::t0, 5.0, 30.0, 6};
  s.context.n_phases = 1;
  s.context.decoherence.tphi_02 = 2;
  s.context.integrator.positivity_tolerance = 1e-7;
  s.jobs = 3;
  try {
    run_sweep(s);
    FAIL("expected a failure");
  } catch (const SweepPointError& e) {
    CHECK(e.physics());
    s.jobs = 1;
    try {
      run_sweep(s);
    } catch (const SweepPointError& f) {
      CHECK(f.row() == e.row());
    }
  }
}

}
