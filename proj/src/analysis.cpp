#include "cpt/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <sstream>

#include <unsupported/Eigen/LevenbergMarquardt>

#include "parallel.hpp"

namespace cpt {

double measurement_mean(double p2_true, const MeasurementModel& m) {
  const double p = m.fidelity * p2_true + m.background;
  if (!(p >= 0.0 && p <= 1.0)) {
    std::ostringstream msg;
    msg << "click probability " << p << " outside [0, 1]";
    throw ParameterError(msg.str());
  }
  return p;
}

double apply_measurement(double p2_true, const MeasurementModel& m, std::mt19937_64& rng) {
  const double p = measurement_mean(p2_true, m);
  std::binomial_distribution<int> draw(m.trials, p);
  return static_cast<double>(draw(rng)) / m.trials;
}

double invert_measurement(double observed, const MeasurementModel& m) {
  if (!(m.fidelity > 0.0)) throw ParameterError("cannot invert a measurement with zero fidelity");
  return std::clamp((observed - m.background) / m.fidelity, 0.0, 1.0);
}

ParabolaVertex fit_vertex(const Series& s, std::size_t center, int window) {
  if (window < 3 || window % 2 == 0) throw ParameterError("parabola window must be odd and >= 3");
  const auto half = static_cast<std::size_t>(window / 2);
  if (s.x.size() != s.y.size()) throw ParameterError("series x and y lengths differ");
  if (center < half || center + half >= s.x.size()) {
    throw DomainError("extremum at the series edge; the parabola window does not fit");
  }

  const double x0 = s.x[center];
  Eigen::MatrixXd design(window, 3);
  Eigen::VectorXd y(window);
  for (int k = 0; k < window; ++k) {
    const std::size_t i = center - half + static_cast<std::size_t>(k);
    const double u = s.x[i] - x0;
    design(k, 0) = 1.0;
    design(k, 1) = u;
    design(k, 2) = u * u;
    y(k) = s.y[i];
  }
  const Eigen::Matrix3d normal = design.transpose() * design;
  const Eigen::Vector3d coef = normal.ldlt().solve(design.transpose() * y);
  const double a = coef(0), b = coef(1), c = coef(2);
  if (c == 0.0) throw DomainError("parabola fit is degenerate (zero curvature)");

  const double u_vertex = -b / (2.0 * c);
  const double u_lo = s.x[center - half] - x0;
  const double u_hi = s.x[center + half] - x0;
  if (u_vertex < std::min(u_lo, u_hi) || u_vertex > std::max(u_lo, u_hi)) {
    throw DomainError("fitted vertex lies outside the window; widen the window");
  }

  ParabolaVertex v;
  v.center_index = center;
  v.x = x0 + u_vertex;
  v.y = a - b * b / (4.0 * c);
  const double rss = (design * coef - y).squaredNorm();
  if (window > 3) {
    const double s2 = rss / (window - 3);
    const Eigen::Matrix3d cov = s2 * normal.inverse();
    const Eigen::Vector3d grad(1.0, -b / (2.0 * c), b * b / (4.0 * c * c));
    v.y_sigma = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  }
  return v;
}

namespace {

std::size_t argmax(const std::vector<double>& y) {
  return static_cast<std::size_t>(std::distance(y.begin(), std::max_element(y.begin(), y.end())));
}

std::size_t argmin(const std::vector<double>& y) {
  return static_cast<std::size_t>(std::distance(y.begin(), std::min_element(y.begin(), y.end())));
}

std::size_t on_cut_center(const Series& on, const Series& off, std::size_t off_peak, Extremum mode) {
  if (mode == Extremum::minimum) return argmin(on.y);
  if (mode == Extremum::maximum) return argmax(on.y);

  // Region spanned by the off-resonance peak above half maximum.
  const double half = 0.5 * (off.y[off_peak] + *std::min_element(off.y.begin(), off.y.end()));
  std::size_t lo = off_peak, hi = off_peak;
  while (lo > 0 && off.y[lo - 1] >= half) --lo;
  while (hi + 1 < off.y.size() && off.y[hi + 1] >= half) ++hi;
  const double x_lo = off.x[lo], x_hi = off.x[hi], x_peak = off.x[off_peak];

  std::optional<std::size_t> dip;
  std::optional<std::size_t> top;
  for (std::size_t i = 1; i + 1 < on.y.size(); ++i) {
    if (on.x[i] < x_lo || on.x[i] > x_hi) continue;
    const bool local_min = on.y[i] <= on.y[i - 1] && on.y[i] <= on.y[i + 1] &&
                           (on.y[i] < on.y[i - 1] || on.y[i] < on.y[i + 1]);
    if (local_min && (!dip || std::abs(on.x[i] - x_peak) < std::abs(on.x[*dip] - x_peak))) dip = i;
    if (!top || on.y[i] > on.y[*top]) top = i;
  }
  if (dip) return *dip;
  if (top) return *top;
  return argmax(on.y);
}

}  // namespace

ContrastResult parabolic_contrast(const Series& on_cut, const Series& off_cut, const ContrastOptions& opt) {
  if (on_cut.x.size() < 5 || off_cut.x.size() < 5) throw ParameterError("contrast needs at least 5 points per cut");
  if (on_cut.x.size() != on_cut.y.size() || off_cut.x.size() != off_cut.y.size()) {
    throw ParameterError("series x and y lengths differ");
  }
  const std::size_t off_peak = argmax(off_cut.y);
  ContrastResult r;
  r.off = fit_vertex(off_cut, off_peak, opt.window);
  r.on = fit_vertex(on_cut, on_cut_center(on_cut, off_cut, off_peak, opt.on_extremum), opt.window);
  if (!(r.off.y > 0.0)) throw DomainError("off-resonance vertex must be positive");
  r.contrast = 1.0 - r.on.y / r.off.y;
  const double d_on = r.on.y_sigma / r.off.y;
  const double d_off = r.on.y * r.off.y_sigma / (r.off.y * r.off.y);
  r.uncertainty = std::hypot(d_on, d_off);
  return r;
}

namespace {

struct LorentzianFunctor : Eigen::DenseFunctor<double> {
  const std::vector<double>& x;
  const std::vector<double>& y;
  double x_ref;
  bool linear;

  LorentzianFunctor(const std::vector<double>& xs, const std::vector<double>& ys, double ref, bool lin)
      : Eigen::DenseFunctor<double>(lin ? 5 : 4, static_cast<int>(xs.size())), x(xs), y(ys), x_ref(ref), linear(lin) {}

  // p = (offset, amplitude, center, fwhm[, slope])
  int operator()(const Eigen::VectorXd& p, Eigen::VectorXd& f) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double z = 2.0 * (x[i] - p(2)) / p(3);
      double v = p(0) + p(1) / (1.0 + z * z) - y[i];
      if (linear) v += p(4) * (x[i] - x_ref);
      f(static_cast<Eigen::Index>(i)) = v;
    }
    return 0;
  }

  int df(const Eigen::VectorXd& p, Eigen::MatrixXd& j) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      const double z = 2.0 * (x[i] - p(2)) / p(3);
      const double l = 1.0 / (1.0 + z * z);
      j(r, 0) = 1.0;
      j(r, 1) = l;
      j(r, 2) = p(1) * l * l * 4.0 * z / p(3);
      j(r, 3) = p(1) * l * l * 2.0 * z * z / p(3);
      if (linear) j(r, 4) = x[i] - x_ref;
    }
    return 0;
  }
};

double half_width_guess(const std::vector<double>& x, const std::vector<double>& dev, std::size_t at) {
  const double half = 0.5 * dev[at];
  std::size_t lo = at, hi = at;
  while (lo > 0 && dev[lo - 1] > half) --lo;
  while (hi + 1 < dev.size() && dev[hi + 1] > half) ++hi;
  const double step = std::abs(x[1] - x[0]);
  return std::max(std::abs(x[hi] - x[lo]), 2.0 * step);
}

}  // namespace

LorentzianFit linewidth_fit(const Series& cut, Polarity polarity, bool linear_background) {
  const auto& x = cut.x;
  const auto& y = cut.y;
  if (x.size() != y.size() || x.size() < 5) throw FitError("linewidth fit needs at least 5 points");

  std::vector<double> sorted = y;
  std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(sorted.size() / 2), sorted.end());
  const double median = sorted[sorted.size() / 2];
  const double y_max = *std::max_element(y.begin(), y.end());
  const double y_min = *std::min_element(y.begin(), y.end());
  if (polarity == Polarity::automatic) polarity = (y_max - median >= median - y_min) ? Polarity::peak : Polarity::dip;

  const bool peak = polarity == Polarity::peak;
  std::vector<double> dev(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) dev[i] = peak ? y[i] - y_min : y_max - y[i];
  const std::size_t at = argmax(dev);

  const double x_ref = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  Eigen::VectorXd p(linear_background ? 5 : 4);
  p.head<4>() << (peak ? y_min : y_max), (peak ? y_max - y_min : y_min - y_max), x[at], half_width_guess(x, dev, at);
  if (linear_background) p(4) = 0.0;

  LorentzianFunctor functor(x, y, x_ref, linear_background);
  Eigen::LevenbergMarquardt<LorentzianFunctor> lm(functor);
  lm.setMaxfev(2000);
  lm.setXtol(1e-12);
  lm.setFtol(1e-12);
  const auto status = lm.minimize(p);

  using namespace Eigen::LevenbergMarquardtSpace;
  const bool ok = status == RelativeReductionTooSmall || status == RelativeErrorTooSmall ||
                  status == RelativeErrorAndReductionTooSmall || status == CosinusTooSmall ||
                  status == XtolTooSmall || status == FtolTooSmall || status == GtolTooSmall;
  if (!ok || !p.allFinite() || p(3) == 0.0) {
    std::ostringstream msg;
    msg << "Lorentzian fit did not converge (status " << static_cast<int>(status) << ", " << lm.nfev()
        << " evaluations, center " << p(2) << ", width " << p(3) << ")";
    throw FitError(msg.str());
  }

  LorentzianFit fit;
  fit.offset = p(0);
  fit.amplitude = p(1);
  fit.center = p(2);
  fit.fwhm = std::abs(p(3));
  fit.x_ref = x_ref;
  if (linear_background) fit.slope = p(4);
  fit.iterations = static_cast<int>(lm.iterations());
  Eigen::VectorXd resid(static_cast<Eigen::Index>(x.size()));
  functor(p, resid);
  fit.rss = resid.squaredNorm();
  return fit;
}

Series window(const Series& s, double center, double half_width) {
  Series out = s;
  out.x.clear();
  out.y.clear();
  for (std::size_t i = 0; i < s.x.size(); ++i) {
    if (std::abs(s.x[i] - center) <= half_width * (1.0 + 1e-12)) {
      out.x.push_back(s.x[i]);
      out.y.push_back(s.y[i]);
    }
  }
  return out;
}

double tphi_02_from_fwhm(double fwhm_mhz, double t1_21_ns) {
  const double gamma = 0.5 * angular_from_mhz(fwhm_mhz);
  const double pure = gamma - 0.5 * rate_from_time(t1_21_ns);
  if (!(pure > 0.0)) throw DomainError("linewidth is narrower than the relaxation limit");
  return 1.0 / pure;
}

double gamma_02_mhz(const DecoherenceParams& dec) { return mhz_from_angular(dec.gamma_02()); }

double gamma_01_mhz(const DecoherenceParams& dec) { return mhz_from_angular(dec.gamma_01()); }

double at_only_contrast(double gamma_01, double gamma_02, double omega_c) {
  if (gamma_01 < 0.0 || gamma_02 < 0.0 || omega_c < 0.0) throw ParameterError("rates must be nonnegative");
  const double sum = gamma_02 + gamma_01;
  const double denom = sum * sum + omega_c * omega_c;
  if (denom == 0.0) throw DomainError("at_only_contrast undefined for all-zero rates");
  return 1.0 - 2.0 * gamma_02 * sum / denom;
}

AtOnlySpread at_only_spread(const DecoherenceParams& dec, double omega_c_mhz, const std::vector<double>& tphi_02_values) {
  AtOnlySpread s;
  s.nominal = at_only_contrast(gamma_01_mhz(dec), gamma_02_mhz(dec), omega_c_mhz);
  s.low = s.high = s.nominal;
  for (double t : tphi_02_values) {
    DecoherenceParams d = dec;
    d.tphi_02 = t;
    const double c = at_only_contrast(gamma_01_mhz(d), gamma_02_mhz(d), omega_c_mhz);
    s.tphi_02_ns.push_back(t);
    s.contrast.push_back(c);
    s.low = std::min(s.low, c);
    s.high = std::max(s.high, c);
  }
  return s;
}

std::vector<double> p2_vs_duration(const SimulationContext& ctx, std::span<const double> t0_values,
                                   IntegrationStats* stats) {
  const auto pops = populations_vs_duration(ctx, t0_values, stats);
  std::vector<double> p2;
  p2.reserve(pops.size());
  for (const auto& p : pops) p2.push_back(p[2]);
  return p2;
}

std::vector<double> sensitivity_curve(const SimulationContext& ctx, double t0, std::span<const double> tphi_01_values,
                                      int jobs) {
  std::vector<double> out(tphi_01_values.size());
  detail::parallel_for(out.size(), jobs, [&](std::size_t i) {
    SimulationContext local = ctx;
    local.decoherence.tphi_01 = tphi_01_values[i];
    local.drive.t0 = t0;
    const double at[1] = {t0};
    out[i] = p2_vs_duration(local, at).front();
  });
  return out;
}

DarkResonance locate_dark_resonance(const SimulationContext& ctx, double fc_lo, double fc_hi, int jobs) {
  if (!(fc_lo < fc_hi)) throw ParameterError("locate_dark_resonance requires fc_lo < fc_hi");
  SimulationContext ideal = ctx;
  ideal.decoherence.tphi_01 = kInfiniteTime;
  const double t0 = ctx.drive.t0;
  auto p2_at = [&](double fc) {
    SimulationContext local = ideal;
    local.drive.fc = fc;
    const double at[1] = {t0};
    return p2_vs_duration(local, at).front();
  };

  constexpr int kCoarse = 31;
  std::vector<double> fcs(kCoarse), p2(kCoarse);
  for (int i = 0; i < kCoarse; ++i) fcs[static_cast<std::size_t>(i)] = fc_lo + (fc_hi - fc_lo) * i / (kCoarse - 1);
  detail::parallel_for(fcs.size(), jobs, [&](std::size_t i) { p2[i] = p2_at(fcs[i]); });
  const std::size_t best = argmin(p2);
  if (best == 0 || best + 1 == fcs.size()) throw DomainError("no interior P2 minimum in the coupling range");

  // Golden-section refinement within the bracketing coarse cells.
  const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = fcs[best - 1], b = fcs[best + 1];
  double c = b - ratio * (b - a), d = a + ratio * (b - a);
  double fc_val = p2_at(c), fd_val = p2_at(d);
  while (b - a > 1e-6) {
    if (fc_val < fd_val) {
      b = d;
      d = c;
      fd_val = fc_val;
      c = b - ratio * (b - a);
      fc_val = p2_at(c);
    } else {
      a = c;
      c = d;
      fc_val = fd_val;
      d = a + ratio * (b - a);
      fd_val = p2_at(d);
    }
  }
  DarkResonance r;
  r.fc = 0.5 * (a + b);
  r.p2 = p2_at(r.fc);
  return r;
}

}  // namespace cpt
