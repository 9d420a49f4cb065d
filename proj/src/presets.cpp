#include "cpt/presets.hpp"

namespace cpt {

RunConfig preset_fig2() {
  RunConfig c;
  auto& ctx = c.context;
  ctx.device.f01 = 6.205;
  ctx.device.f12 = 5.865;
  ctx.drive.omega_p01 = angular_from_mhz(48.0);
  ctx.drive.omega_c12 = angular_from_mhz(32.0);
  ctx.drive.fp = 6.035;
  ctx.drive.fc = 5.865;
  ctx.drive.t0 = 30.0;
  ctx.decoherence.t1_10 = 108.0;
  ctx.decoherence.t1_21 = 77.0;
  ctx.decoherence.tphi_01 = 30.0;
  ctx.decoherence.tphi_02 = 6.0;
  ctx.decoherence.tphi_12 = 30.0;
  ctx.integrator.positivity_tolerance = 1e-3;

  SweepSection s;
  s.axis1 = AxisSpec{Axis::fp, 5.99, 6.08, 61};
  s.axis2 = AxisSpec{Axis::fc, 5.72, 6.00, 61};
  c.sweep = s;
  c.measurement = MeasurementModel{0.80, 0.03, 4000};
  return c;
}

RunConfig preset_fig3() {
  RunConfig c;
  auto& ctx = c.context;
  ctx.device.f01 = 6.19;
  ctx.device.f12 = 5.85;
  ctx.drive.omega_p01 = angular_from_mhz(48.0);
  ctx.drive.omega_c12 = angular_from_mhz(35.0);
  ctx.drive.fp = 6.0158;
  ctx.drive.fc = 5.85;
  ctx.drive.t0 = 80.0;
  ctx.decoherence.t1_10 = 108.0;
  ctx.decoherence.t1_21 = 77.0;
  ctx.decoherence.tphi_01 = 12.0;
  ctx.decoherence.tphi_02 = 20.0;
  ctx.decoherence.tphi_12 = 20.0;

  SweepSection s;
  s.axis1 = AxisSpec{Axis::fc, 5.70, 6.00, 61};
  s.axis2 = AxisSpec{Axis::t0, 0.0, 80.0, 81};
  c.sweep = s;
  c.measurement = MeasurementModel{0.80, 0.03, 5000};
  return c;
}

}  // namespace cpt
