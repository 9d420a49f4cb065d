#pragma once

// Run configuration: strict JSON with units in the key names.
//
//   {
//     "device":      {"f01_ghz", "f12_ghz", "f23_ghz", "dipole"},
//     "drive":       {"fp_ghz", "fc_ghz", "omega_p01_mhz", "omega_c12_mhz",
//                     "rel_phase_rad", "t0_ns", "envelope": {"shape", "ramp_ns"}},
//     "decoherence": {"t1_10_ns", "t1_21_ns", "t1_32_ns", "tphi_01_ns",
//                     "tphi_02_ns", "tphi_12_ns", "tphi_3x_ns"},
//     "integrator":  {"dt_ns", "record_stride", "phases", "positivity_check",
//                     "positivity_tolerance", "rwa_cutoff_ghz"},
//     "sweep":       {"axis1": {"param", "start", "stop", "n_points"}, "axis2", "shot_noise"},
//     "measurement": {"fidelity", "background", "trials"},
//     "seed": 0
//   }
//
// Rabi rates are omega / 2 pi in MHz. Times accept "inf". f23_ghz, t1_32_ns
// and tphi_3x_ns accept null for their derived defaults. Sweep start/stop are
// in GHz for fp and fc and in ns for t0.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "cpt/sweep.hpp"

namespace cpt {

using Json = nlohmann::ordered_json;

/// Invalid configuration or input file; maps to exit code 2.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepSection {
  AxisSpec axis1;
  std::optional<AxisSpec> axis2;
  bool shot_noise = false;
};

struct RunConfig {
  SimulationContext context;
  std::optional<SweepSection> sweep;
  std::optional<MeasurementModel> measurement;
  std::uint64_t seed = 0;

  /// Re-runs every module invariant; throws ConfigError.
  void validate() const;
};

Json to_json(const DeviceParams& d);
Json to_json(const DriveParams& d);
Json to_json(const DecoherenceParams& d);
Json to_json(const IntegratorConfig& c, int n_phases);
Json to_json(const MeasurementModel& m);
Json to_json(const AxisSpec& a);
Json to_json(const RunConfig& c);

/// Strict conversion; unknown keys and wrong types throw ConfigError naming the path.
RunConfig config_from_json(const Json& doc);

/// Applies "dotted.path=value" overrides. The value is parsed as JSON when
/// possible and taken as a string otherwise.
void apply_override(Json& doc, const std::string& assignment);

/// Parses text into a JSON document; syntax errors report line and column.
Json parse_json_text(const std::string& text, const std::string& source);

/// Reads a config file. A metadata sidecar ({"schema_version", "config", ...})
/// is accepted and its embedded config used. Unknown keys are reported with the
/// line they appear on when it can be found.
RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Config built from a base document plus overrides.
RunConfig build_config(Json doc, const std::vector<std::string>& overrides, const std::string& source,
                       const std::string& text = "");

SweepSpec make_sweep_spec(const RunConfig& cfg, int jobs);

}  // namespace cpt
