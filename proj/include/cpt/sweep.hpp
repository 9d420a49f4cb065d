#pragma once

// Grid evaluation of the phase-averaged final populations over one or two
// drive parameters (probe frequency, coupling frequency, pulse duration).

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cpt/evolution.hpp"
#include "cpt/model.hpp"

namespace cpt {

enum class Axis { fp, fc, t0 };

std::string axis_name(Axis axis);
Axis parse_axis(const std::string& name);

struct AxisSpec {
  Axis id = Axis::fp;
  double start = 0.0;
  double stop = 1.0;
  int n_points = 2;

  /// Evenly spaced grid values; the last value is exactly `stop`.
  std::vector<double> values() const;
  double step() const { return (stop - start) / (n_points - 1); }
};

/// Everything a simulation point needs besides the swept coordinates.
struct SimulationContext {
  DeviceParams device;
  DriveParams drive;
  DecoherenceParams decoherence;
  IntegratorConfig integrator;
  int n_phases = kDefaultPhases;
  DensityMatrix4 initial;  // |0><0| unless overridden
};

struct SweepSpec {
  AxisSpec axis1;
  std::optional<AxisSpec> axis2;
  SimulationContext context;
  std::optional<MeasurementModel> measurement;
  bool shot_noise = false;
  std::uint64_t rng_seed = 0;
  /// Worker threads; 0 means all available cores.
  int jobs = 0;

  void validate() const;
};

struct SweepMetadata {
  std::string tool_version;
  double wall_seconds = 0.0;  // informational; excluded from data files
  IntegrationStats stats;
};

struct SweepResult {
  AxisSpec axis1;
  std::optional<AxisSpec> axis2;
  std::vector<double> axis1_values;
  std::vector<double> axis2_values;  // empty for a 1-D sweep
  // Rows follow axis1, columns axis2 (one column for a 1-D sweep).
  Eigen::MatrixXd p2;
  Eigen::MatrixXd p1;
  Eigen::MatrixXd p3;
  SweepSpec spec;
  SweepMetadata metadata;

  bool is_2d() const { return axis2.has_value(); }
};

/// A propagation failure annotated with the grid coordinates that caused it.
class SweepPointError : public std::runtime_error {
 public:
  SweepPointError(const std::string& what, std::size_t row, std::size_t col, bool physics)
      : std::runtime_error(what), row_(row), col_(col), physics_(physics) {}
  std::size_t row() const { return row_; }
  std::size_t col() const { return col_; }
  /// True when the cause was an unphysical state rather than bad input.
  bool physics() const { return physics_; }

 private:
  std::size_t row_;
  std::size_t col_;
  bool physics_;
};

/// Applies one swept coordinate to a drive.
void set_axis_value(DriveParams& drive, Axis axis, double value);

/// Phase-averaged populations after pulses of each duration in `t0_values`
/// (any order). With a rectangular envelope one trajectory to the longest
/// duration is sampled; the samples are identical to separate runs.
std::vector<std::array<double, 4>> populations_vs_duration(const SimulationContext& ctx,
                                                           std::span<const double> t0_values,
                                                           IntegrationStats* stats = nullptr);

SweepResult run_sweep(const SweepSpec& spec);

/// Per-point generator seeded from (seed, flat index) so noise does not depend on scheduling.
std::mt19937_64 point_rng(std::uint64_t seed, std::uint64_t flat_index);

/// Replaces every p2 value by a measurement-model shot-noise sample, inverted
/// back to a population estimate.
void apply_shot_noise(SweepResult& result, const MeasurementModel& m, std::uint64_t seed);

/// One-dimensional slice through a sweep.
struct Series {
  Axis axis = Axis::fp;  // running coordinate
  std::vector<double> x;
  std::vector<double> y;
  std::optional<Axis> fixed_axis;
  double fixed_value = 0.0;  // realized grid value of the fixed axis
};

enum class Quantity { p1, p2, p3 };

/// Nearest-grid-line cut of a 2-D sweep at axis = value. Throws DomainError
/// when the value lies outside the axis range.
Series cut(const SweepResult& result, Axis axis, double value, Quantity quantity = Quantity::p2);

}  // namespace cpt
