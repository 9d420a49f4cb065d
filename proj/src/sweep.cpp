#include "cpt/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <thread>

#include "cpt/analysis.hpp"
#include "parallel.hpp"

namespace cpt {

std::string axis_name(Axis axis) {
  switch (axis) {
    case Axis::fp: return "fp";
    case Axis::fc: return "fc";
    case Axis::t0: return "t0";
  }
  return "?";
}

Axis parse_axis(const std::string& name) {
  if (name == "fp") return Axis::fp;
  if (name == "fc") return Axis::fc;
  if (name == "t0") return Axis::t0;
  throw ParameterError("unknown sweep axis '" + name + "' (expected fp, fc or t0)");
}

std::vector<double> AxisSpec::values() const {
  std::vector<double> v(static_cast<std::size_t>(n_points));
  const double h = step();
  for (int i = 0; i < n_points; ++i) v[static_cast<std::size_t>(i)] = start + h * i;
  v.back() = stop;
  return v;
}

namespace {

void validate_axis(const AxisSpec& a) {
  if (a.n_points < 2) throw ParameterError("axis " + axis_name(a.id) + " needs at least 2 points");
  if (!(a.start < a.stop)) throw ParameterError("axis " + axis_name(a.id) + " requires start < stop");
  if (a.id == Axis::t0 && a.start < 0.0) throw ParameterError("t0 axis must start at or after 0 ns");
  if (a.id != Axis::t0 && !(a.start > 0.0)) throw ParameterError("frequency axes must be positive");
}

}  // namespace

void SweepSpec::validate() const {
  validate_axis(axis1);
  if (axis2) {
    validate_axis(*axis2);
    if (axis2->id == axis1.id) throw ParameterError("sweep axes must be distinct");
  }
  context.device.validate();
  context.drive.validate();
  context.decoherence.validate();
  context.integrator.validate();
  if (context.n_phases < 1) throw ParameterError("n_phases must be >= 1");
  if (measurement) measurement->validate();
  if (shot_noise && !measurement) throw ParameterError("shot noise requires a measurement model");
  if (jobs < 0) throw ParameterError("jobs must be >= 0");
}

void set_axis_value(DriveParams& drive, Axis axis, double value) {
  switch (axis) {
    case Axis::fp: drive.fp = value; break;
    case Axis::fc: drive.fc = value; break;
    case Axis::t0: drive.t0 = value; break;
  }
}

std::vector<std::array<double, 4>> populations_vs_duration(const SimulationContext& ctx,
                                                           std::span<const double> t0_values,
                                                           IntegrationStats* stats) {
  std::vector<std::array<double, 4>> out(t0_values.size());
  if (t0_values.empty()) return out;

  if (ctx.drive.envelope.is_rectangular()) {
    std::vector<std::size_t> order(t0_values.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return t0_values[a] < t0_values[b]; });
    std::vector<double> sorted;
    sorted.reserve(order.size());
    for (std::size_t i : order) sorted.push_back(t0_values[i]);

    DriveParams drive = ctx.drive;
    drive.t0 = sorted.back();
    const auto states = phase_averaged_states_at(ctx.initial, ctx.device, drive, ctx.decoherence,
                                                 ctx.integrator, ctx.n_phases, sorted, stats);
    for (std::size_t k = 0; k < order.size(); ++k) out[order[k]] = states[k].populations();
    return out;
  }

  for (std::size_t i = 0; i < t0_values.size(); ++i) {
    DriveParams drive = ctx.drive;
    drive.t0 = t0_values[i];
    const double end[1] = {drive.t0};
    const auto states = phase_averaged_states_at(ctx.initial, ctx.device, drive, ctx.decoherence,
                                                 ctx.integrator, ctx.n_phases, end, stats);
    out[i] = states.front().populations();
  }
  return out;
}

std::mt19937_64 point_rng(std::uint64_t seed, std::uint64_t flat_index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(flat_index), static_cast<std::uint32_t>(flat_index >> 32)};
  return std::mt19937_64(seq);
}

void apply_shot_noise(SweepResult& result, const MeasurementModel& m, std::uint64_t seed) {
  const auto cols = static_cast<std::uint64_t>(result.p2.cols());
  for (Eigen::Index r = 0; r < result.p2.rows(); ++r) {
    for (Eigen::Index c = 0; c < result.p2.cols(); ++c) {
      auto rng = point_rng(seed, static_cast<std::uint64_t>(r) * cols + static_cast<std::uint64_t>(c));
      const double p = std::clamp(result.p2(r, c), 0.0, 1.0);
      result.p2(r, c) = invert_measurement(apply_measurement(p, m, rng), m);
    }
  }
}

namespace {

// A unit of work: either a single grid point, or a whole line of t0 values
// sharing every other coordinate.
struct WorkUnit {
  std::vector<std::size_t> rows;
  std::vector<std::size_t> cols;
};

std::string point_label(const SweepResult& r, std::size_t row, std::size_t col) {
  std::ostringstream os;
  os.precision(10);
  os << "at " << axis_name(r.axis1.id) << "=" << r.axis1_values[row];
  if (r.axis2) os << ", " << axis_name(r.axis2->id) << "=" << r.axis2_values[col];
  return os.str();
}

}  // namespace

SweepResult run_sweep(const SweepSpec& spec) {
  spec.validate();
  const auto started = std::chrono::steady_clock::now();

  SweepResult result;
  result.axis1 = spec.axis1;
  result.axis2 = spec.axis2;
  result.axis1_values = spec.axis1.values();
  if (spec.axis2) result.axis2_values = spec.axis2->values();
  result.spec = spec;
  result.metadata.tool_version = CPT_VERSION;

  const std::size_t n_rows = result.axis1_values.size();
  const std::size_t n_cols = spec.axis2 ? result.axis2_values.size() : 1;
  result.p1 = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n_cols));
  result.p2 = result.p1;
  result.p3 = result.p1;

  auto coordinate = [&](std::size_t row, std::size_t col, DriveParams& drive) {
    set_axis_value(drive, spec.axis1.id, result.axis1_values[row]);
    if (spec.axis2) set_axis_value(drive, spec.axis2->id, result.axis2_values[col]);
  };

  // t0 lines are integrated once when the envelope does not depend on t0.
  const bool rectangular = spec.context.drive.envelope.is_rectangular();
  std::vector<WorkUnit> units;
  if (rectangular && spec.axis1.id == Axis::t0) {
    for (std::size_t c = 0; c < n_cols; ++c) {
      WorkUnit u;
      for (std::size_t r = 0; r < n_rows; ++r) {
        u.rows.push_back(r);
        u.cols.push_back(c);
      }
      units.push_back(std::move(u));
    }
  } else if (rectangular && spec.axis2 && spec.axis2->id == Axis::t0) {
    for (std::size_t r = 0; r < n_rows; ++r) {
      WorkUnit u;
      for (std::size_t c = 0; c < n_cols; ++c) {
        u.rows.push_back(r);
        u.cols.push_back(c);
      }
      units.push_back(std::move(u));
    }
  } else {
    for (std::size_t r = 0; r < n_rows; ++r) {
      for (std::size_t c = 0; c < n_cols; ++c) units.push_back(WorkUnit{{r}, {c}});
    }
  }

  std::vector<IntegrationStats> unit_stats(units.size());
  std::vector<std::exception_ptr> unit_errors(units.size());
  std::atomic<std::size_t> next{0};
  // Units past the first failure are skipped; earlier ones still run so the
  // reported error does not depend on scheduling.
  std::atomic<std::size_t> first_failed{units.size()};

  auto worker = [&]() {
    for (;;) {
      const std::size_t u = next.fetch_add(1);
      if (u >= units.size()) return;
      if (u > first_failed.load()) continue;
      const WorkUnit& unit = units[u];
      try {
        SimulationContext ctx = spec.context;
        coordinate(unit.rows.front(), unit.cols.front(), ctx.drive);
        std::vector<double> t0s;
        for (std::size_t k = 0; k < unit.rows.size(); ++k) {
          DriveParams drive = ctx.drive;
          coordinate(unit.rows[k], unit.cols[k], drive);
          t0s.push_back(drive.t0);
        }
        const auto pops = populations_vs_duration(ctx, t0s, &unit_stats[u]);
        for (std::size_t k = 0; k < pops.size(); ++k) {
          const auto r = static_cast<Eigen::Index>(unit.rows[k]);
          const auto c = static_cast<Eigen::Index>(unit.cols[k]);
          result.p1(r, c) = pops[k][1];
          result.p2(r, c) = pops[k][2];
          result.p3(r, c) = pops[k][3];
        }
      } catch (...) {
        unit_errors[u] = std::current_exception();
        std::size_t seen = first_failed.load();
        while (u < seen && !first_failed.compare_exchange_weak(seen, u)) {
        }
      }
    }
  };

  const int n_threads = std::min<int>(detail::resolve_jobs(spec.jobs), static_cast<int>(units.size()));
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(static_cast<std::size_t>(n_threads));
    for (int i = 0; i < n_threads; ++i) pool.emplace_back(worker);
  }

  for (std::size_t u = 0; u < units.size(); ++u) {
    if (!unit_errors[u]) continue;
    const std::size_t row = units[u].rows.front();
    const std::size_t col = units[u].cols.front();
    std::string where = point_label(result, row, col);
    if (units[u].rows.size() > 1) where += " (t0 line)";
    try {
      std::rethrow_exception(unit_errors[u]);
    } catch (const PositivityError& e) {
      throw SweepPointError(std::string(e.what()) + " " + where, row, col, true);
    } catch (const std::exception& e) {
      throw SweepPointError(std::string(e.what()) + " " + where, row, col, false);
    }
  }

  for (const auto& s : unit_stats) {
    result.metadata.stats.renormalizations += s.renormalizations;
    result.metadata.stats.positivity_warnings += s.positivity_warnings;
  }

  if (spec.measurement && spec.shot_noise) apply_shot_noise(result, *spec.measurement, spec.rng_seed);

  result.metadata.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return result;
}

Series cut(const SweepResult& result, Axis axis, double value, Quantity quantity) {
  const Eigen::MatrixXd& data = quantity == Quantity::p1 ? result.p1 : quantity == Quantity::p3 ? result.p3 : result.p2;

  const bool on_axis1 = result.axis1.id == axis;
  const bool on_axis2 = result.axis2 && result.axis2->id == axis;
  if (!on_axis1 && !on_axis2) throw DomainError("sweep has no " + axis_name(axis) + " axis");
  if (!result.axis2) throw DomainError("cut requires a two-dimensional sweep");

  const AxisSpec& fixed = on_axis1 ? result.axis1 : *result.axis2;
  const std::vector<double>& fixed_values = on_axis1 ? result.axis1_values : result.axis2_values;
  const double slack = 1e-9 * std::abs(fixed.step());
  if (value < fixed.start - slack || value > fixed.stop + slack) {
    std::ostringstream msg;
    msg << "cut value " << value << " outside " << axis_name(axis) << " range [" << fixed.start << ", "
        << fixed.stop << "]";
    throw DomainError(msg.str());
  }
  std::size_t nearest = 0;
  for (std::size_t i = 1; i < fixed_values.size(); ++i) {
    if (std::abs(fixed_values[i] - value) < std::abs(fixed_values[nearest] - value)) nearest = i;
  }

  Series s;
  s.fixed_axis = axis;
  s.fixed_value = fixed_values[nearest];
  if (on_axis1) {
    s.axis = result.axis2->id;
    s.x = result.axis2_values;
    for (Eigen::Index c = 0; c < data.cols(); ++c) s.y.push_back(data(static_cast<Eigen::Index>(nearest), c));
  } else {
    s.axis = result.axis1.id;
    s.x = result.axis1_values;
    for (Eigen::Index r = 0; r < data.rows(); ++r) s.y.push_back(data(r, static_cast<Eigen::Index>(nearest)));
  }
  return s;
}

}  // namespace cpt
