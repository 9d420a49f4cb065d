#include <doctest.h>

#include <cmath>

#include "cpt/analysis.hpp"
#include "cpt/presets.hpp"

using namespace cpt;

namespace {

Series sampled(double lo, double hi, int n, auto f) {
  Series s;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * i / (n - 1);
    s.x.push_back(x);
    s.y.push_back(f(x));
  }
  return s;
}

SimulationContext fig3_on_resonance() {
  SimulationContext c = preset_fig3().context;
  c.drive.fc = 5.8254688;
  return c;
}

std::vector<double> trace_times() {
  std::vector<double> t;
  for (int i = 0; i <= 40; ++i) t.push_back(2.0 * i);
  return t;
}

}  // namespace

TEST_SUITE("analysis") {

TEST_CASE("measurement model") {
  const MeasurementModel m;
  CHECK(measurement_mean(0.0, m) == doctest::Approx(0.03));
  CHECK(measurement_mean(1.0, m) == doctest::Approx(0.83));
  CHECK(invert_measurement(0.03, m) == doctest::Approx(0.0));
  CHECK(invert_measurement(0.0, m) == 0.0);
  CHECK(invert_measurement(0.95, m) == 1.0);
  for (double p : {0.0, 0.2, 0.7, 1.0}) CHECK(invert_measurement(measurement_mean(p, m), m) == doctest::Approx(p));
  CHECK_THROWS_AS(measurement_mean(1.5, m), ParameterError);
}

TEST_CASE("binomial readout spread") {
  MeasurementModel m;
  m.fidelity = 1.0;
  m.background = 0.0;
  m.trials = 4000;
  std::mt19937_64 rng(3);
  double sum = 0, sum2 = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double f = apply_measurement(0.5, m, rng);
    sum += f;
    sum2 += f * f;
  }
  const double mean = sum / n;
  const double sd = std::sqrt(sum2 / n - mean * mean);
  CHECK(mean == doctest::Approx(0.5).epsilon(1e-3));
  CHECK(sd == doctest::Approx(0.0079).epsilon(0.03));
}

TEST_CASE("parabolic contrast") {
  const Series off = sampled(-1, 1, 21, [](double x) { return 1 - (x - 0.03) * (x - 0.03); });
  const Series on = sampled(-1, 1, 21, [](double x) { return 0.4 + (x - 0.03) * (x - 0.03); });
  const auto c = parabolic_contrast(on, off);
  CHECK(c.contrast == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(c.on.x == doctest::Approx(0.03));
  CHECK(c.uncertainty < 1e-10);

  CHECK(parabolic_contrast(off, off).contrast == doctest::Approx(0.0).epsilon(1e-12));

  Series on3 = on, off3 = off;
  for (auto& y : on3.y) y *= 3;
  for (auto& y : off3.y) y *= 3;
  CHECK(parabolic_contrast(on3, off3).contrast == doctest::Approx(c.contrast).epsilon(1e-12));

  const Series edge = sampled(0, 1, 21, [](double x) { return x; });
  CHECK_THROWS_AS(fit_vertex(edge, 20, 5), DomainError);
}

TEST_CASE("contrast picks the dip inside the probe peak") {
  auto lorentz = [](double x, double c, double w) { return 1 / (1 + std::pow((x - c) / (w / 2), 2)); };
  const Series off = sampled(-1, 1, 81, [&](double x) { return lorentz(x, 0, 0.6); });
  const Series on = sampled(-1, 1, 81, [&](double x) { return lorentz(x, 0, 0.6) * (1 - 0.5 * lorentz(x, 0.05, 0.2)); });
  const auto c = parabolic_contrast(on, off);
  CHECK(c.on.x == doctest::Approx(0.05).epsilon(0.05));
  CHECK(c.contrast == doctest::Approx(0.5).epsilon(0.05));
}

TEST_CASE("Lorentzian linewidth") {
  auto f = [](double x) { return 0.01 + 0.15 / (1 + std::pow((x - 6.035) / 0.020, 2)); };
  const auto fit = linewidth_fit(sampled(5.99, 6.08, 31, f));
  CHECK(fit.fwhm_mhz() == doctest::Approx(40.0).epsilon(0.1 / 40));
  CHECK(fit.center == doctest::Approx(6.035).epsilon(1e-9));

  auto dip = [](double x) { return 0.3 + 0.5 * (x - 5.8) - 0.1 / (1 + std::pow((x - 5.82) / 0.03, 2)); };
  const auto d = linewidth_fit(sampled(5.72, 5.92, 41, dip), Polarity::dip, true);
  CHECK(d.fwhm_mhz() == doctest::Approx(60.0).epsilon(1e-4));
  CHECK(d.amplitude < 0);
  CHECK(d.slope == doctest::Approx(0.5).epsilon(1e-4));

  const auto w = window(sampled(0, 1, 11, [](double x) { return x; }), 0.5, 0.2);
  CHECK(w.x.size() == 5);
}

TEST_CASE("linewidth relations") {
  DecoherenceParams dec;
  CHECK(gamma_02_mhz(dec) == doctest::Approx(27.56).epsilon(1e-3));
  CHECK(tphi_02_from_fwhm(2 * gamma_02_mhz(dec), 77) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK_THROWS(tphi_02_from_fwhm(1.0, 77));
}

TEST_CASE("Autler-Townes-only contrast") {
  CHECK(at_only_contrast(6.0, 27.5, 32) == doctest::Approx(0.14).epsilon(0.02 / 0.14));
  CHECK(at_only_contrast(0.0, 27.5, 0.0) == doctest::Approx(-1.0));
  CHECK(at_only_contrast(6.0, 27.5, 1e6) == doctest::Approx(1.0).epsilon(1e-6));
  double previous = -2;
  for (double w = 0; w < 200; w += 5) {
    const double c = at_only_contrast(6.0, 27.5, w);
    CHECK(c > previous);
    previous = c;
  }
  const auto spread = at_only_spread(DecoherenceParams{}, 32.0);
  CHECK(spread.low < spread.nominal);
  CHECK(spread.nominal < spread.high);
}

TEST_CASE("off-resonant probe linewidth narrows with longer 0-2 dephasing") {
  SimulationContext c = preset_fig2().context;
  c.drive.fc = 5.73;
  auto fwhm = [&](double tphi02) {
    SweepSpec s;
    s.context = c;
    s.context.decoherence.tphi_02 = tphi02;
    s.axis1 = {Axis::fp, 5.99, 6.08, 31};
    const auto r = run_sweep(s);
    Series cut_fp;
    cut_fp.x = r.axis1_values;
    for (Eigen::Index i = 0; i < r.p2.rows(); ++i) cut_fp.y.push_back(r.p2(i, 0));
    return linewidth_fit(cut_fp, Polarity::peak).fwhm_mhz();
  };
  CHECK(fwhm(12.0) < fwhm(6.0));
}

TEST_CASE("sensitivity curve") {
  const SimulationContext c = fig3_on_resonance();
  const double grid[] = {10.0, 10.0, kInfiniteTime};
  const auto p = sensitivity_curve(c, 40, grid, 2);
  CHECK(p[0] == p[1]);
  CHECK(p[2] < p[0]);
  CHECK(p[2] == doctest::Approx(0.05).epsilon(0.3));
}

TEST_CASE("fit recovers the generating dephasing time") {
  const SimulationContext c = fig3_on_resonance();
  const auto t = trace_times();
  SimulationContext gen = c;
  gen.decoherence.tphi_01 = 12;
  const auto observed = p2_vs_duration(gen, t);

  FitOptions opt;
  opt.jobs = 0;
  const auto report = fit_dephasing(t, observed, c, {DephasingParam::tphi_01}, opt);
  REQUIRE(report.parameters.size() == 1);
  CHECK(report.converged);
  CHECK_FALSE(report.flat_residual);
  CHECK(report.parameters[0].value == doctest::Approx(12.0).epsilon(0.02));

  // residual at the truth is no worse than at any grid candidate
  for (double g : {8.0, 10.0, 14.0, 20.0}) {
    SimulationContext other = c;
    other.decoherence.tphi_01 = g;
    const auto model = p2_vs_duration(other, t);
    double rss = 0;
    for (std::size_t i = 0; i < t.size(); ++i) rss += std::pow(model[i] - observed[i], 2);
    CHECK(report.rss <= rss);
  }
}

TEST_CASE("fit preconditions") {
  const SimulationContext c = fig3_on_resonance();
  const auto t = trace_times();
  const std::vector<double> p(t.size(), 0.1);
  CHECK_THROWS_AS(fit_dephasing(t, p, c, {}), ParameterError);
  CHECK_THROWS_AS(fit_dephasing(t, p, c, {DephasingParam::tphi_01, DephasingParam::tphi_01}), ParameterError);
  const std::vector<double> few{1, 2, 3};
  CHECK_THROWS_AS(fit_dephasing(few, few, c, {DephasingParam::tphi_01}), ParameterError);
  CHECK(parse_param("tphi_12") == DephasingParam::tphi_12);
  CHECK_THROWS_AS(parse_param("t1_10"), ParameterError);
}

}
