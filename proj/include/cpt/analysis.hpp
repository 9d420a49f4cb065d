#pragma once

// Derived quantities extracted from simulated cuts and traces: CPT contrast,
// probe linewidth, the Autler-Townes-only contrast, dephasing-time fits and
// the readout model.

#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpt/model.hpp"
#include "cpt/sweep.hpp"

namespace cpt {

/// A fit that did not converge, or could not be attempted.
class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---- readout -------------------------------------------------------------

/// Click probability fidelity * p2 + background. Throws ParameterError when
/// the result leaves [0, 1].
double measurement_mean(double p2_true, const MeasurementModel& m);

/// Binomial(trials, measurement_mean) / trials.
double apply_measurement(double p2_true, const MeasurementModel& m, std::mt19937_64& rng);

/// (f - background) / fidelity, clamped to [0, 1].
double invert_measurement(double observed, const MeasurementModel& m);

// ---- contrast --------------------------------------------------------------

enum class Extremum { automatic, minimum, maximum };

struct ParabolaVertex {
  double x = 0.0;
  double y = 0.0;
  double y_sigma = 0.0;
  std::size_t center_index = 0;
};

/// Least-squares parabola through `window` points centered on index `center`.
/// Throws DomainError when the window does not fit inside the series or the
/// fitted vertex falls outside the window.
ParabolaVertex fit_vertex(const Series& s, std::size_t center, int window);

struct ContrastOptions {
  int window = 5;
  /// Which extremum of the on-resonance cut to use. `automatic` takes the
  /// interior local minimum nearest the off-resonance peak when one exists
  /// above the off-cut half maximum, otherwise the on-cut maximum there.
  Extremum on_extremum = Extremum::automatic;
};

struct ContrastResult {
  double contrast = 0.0;
  double uncertainty = 0.0;
  ParabolaVertex on;
  ParabolaVertex off;
};

/// 1 - on_vertex / off_vertex from local parabolic fits of the two cuts.
ContrastResult parabolic_contrast(const Series& on_cut, const Series& off_cut, const ContrastOptions& opt = {});

// ---- linewidth -------------------------------------------------------------

enum class Polarity { automatic, peak, dip };

struct LorentzianFit {
  double offset = 0.0;
  double slope = 0.0;      // linear background, per unit x, about x_ref
  double x_ref = 0.0;
  double amplitude = 0.0;  // signed; negative for a dip
  double center = 0.0;     // units of the series x
  double fwhm = 0.0;       // units of the series x
  double rss = 0.0;
  int iterations = 0;

  /// FWHM in MHz for an x axis in GHz.
  double fwhm_mhz() const { return fwhm * 1e3; }
};

/// offset [+ slope (x - x_ref)] + amplitude / (1 + ((x - center) / (fwhm / 2))^2),
/// Levenberg-Marquardt. x_ref is the mean of x. Throws FitError if the
/// iteration cap is hit or the fit degenerates.
LorentzianFit linewidth_fit(const Series& cut, Polarity polarity = Polarity::automatic,
                            bool linear_background = false);

/// Points of a series with |x - center| <= half_width.
Series window(const Series& s, double center, double half_width);

/// Pure dephasing time (ns) implied by a 0-2 linewidth FWHM (MHz) and T1(2->1):
/// gamma_02 = FWHM / 2, gamma_02 = 1/(2 T1) + 1/Tphi.
double tphi_02_from_fwhm(double fwhm_mhz, double t1_21_ns);

/// gamma_02 in MHz (ordinary frequency) for a decoherence set.
double gamma_02_mhz(const DecoherenceParams& dec);
/// gamma_01 in MHz (ordinary frequency) for a decoherence set.
double gamma_01_mhz(const DecoherenceParams& dec);

// ---- Autler-Townes-only contrast ---------------------------------------------

/// 1 - 2 g02 (g02 + g01) / ((g02 + g01)^2 + omega_c^2), all in one frequency unit.
double at_only_contrast(double gamma_01, double gamma_02, double omega_c);

struct AtOnlySpread {
  std::vector<double> tphi_02_ns;
  std::vector<double> contrast;
  double nominal = 0.0;  // at the decoherence set's own tphi_02
  double low = 0.0;
  double high = 0.0;
};

/// at_only_contrast with gamma_02 re-evaluated at each tphi_02 value.
AtOnlySpread at_only_spread(const DecoherenceParams& dec, double omega_c_mhz,
                            const std::vector<double>& tphi_02_values = {5.0, 6.0, 7.0});

// ---- time-domain simulation helpers ------------------------------------------

/// Phase-averaged P2 after pulses of each duration in `t0_values` (any order).
std::vector<double> p2_vs_duration(const SimulationContext& ctx, std::span<const double> t0_values,
                                   IntegrationStats* stats = nullptr);

/// P2 at pulse duration t0 as a function of tphi_01, all else fixed.
std::vector<double> sensitivity_curve(const SimulationContext& ctx, double t0, std::span<const double> tphi_01_values,
                                      int jobs = 1);

struct DarkResonance {
  double fc = 0.0;  // GHz
  double p2 = 0.0;
};

/// Coupling frequency in [fc_lo, fc_hi] that minimizes P2 at the context's t0
/// with the 0-1 coherence made ideal (tphi_01 infinite). Includes the light
/// shift of the driven levels.
DarkResonance locate_dark_resonance(const SimulationContext& ctx, double fc_lo, double fc_hi, int jobs = 1);

// ---- dephasing fit -----------------------------------------------------------

enum class DephasingParam { tphi_01, tphi_02, tphi_12 };

std::string param_name(DephasingParam p);
DephasingParam parse_param(const std::string& name);

struct FitOptions {
  double grid_lo_ns = 1.0;
  double grid_hi_ns = 200.0;
  /// Grid points per free parameter; 0 picks 16, 8 or 6 for 1, 2 or 3 free.
  int grid_points = 0;
  int max_iterations = 200;
  double x_tolerance = 1e-4;  // simplex size in ln(ns)
  double f_tolerance = 1e-14;
  /// Observation noise used for uncertainties when the residual is smaller.
  double noise_floor = 0.0079;
  /// Relative uncertainty, of the whole fit or of the best single readout,
  /// beyond which a parameter counts as unconstrained.
  double flat_threshold = 0.25;
  int jobs = 1;
};

struct FitParameter {
  std::string name;
  std::string unit = "ns";
  double value = 0.0;
  double uncertainty = 0.0;
  /// Relative resolution of the single most sensitive observed point.
  double readout_resolution = 0.0;
};

struct FitReport {
  std::vector<FitParameter> parameters;
  double rss = 0.0;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  bool flat_residual = false;
  int rejected_candidates = 0;
  std::vector<std::string> rejections;
  /// Best residual after each accepted simplex step.
  std::vector<double> rss_history;
};

/// Least-squares fit of the free dephasing times to an observed P2(t0) trace.
/// Seeds a Nelder-Mead simplex in log-parameters from a log-spaced grid.
FitReport fit_dephasing(std::span<const double> t0_values, std::span<const double> observed_p2,
                        const SimulationContext& ctx, const std::vector<DephasingParam>& free,
                        const FitOptions& opt = {});

void set_param(DecoherenceParams& dec, DephasingParam p, double value_ns);
double get_param(const DecoherenceParams& dec, DephasingParam p);

}  // namespace cpt
