#pragma once

// Command implementations behind the cptsim executable, plus the
// figure-reproduction pipelines they drive.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "cpt/config.hpp"

namespace cpt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitPhysics = 3;
inline constexpr int kExitFit = 4;

struct CommandOptions {
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;  // "dotted.key=value"
  std::string out_dir = ".";
  int jobs = 0;  // 0: all cores
  std::optional<std::uint64_t> seed;
  std::optional<double> dt;
  std::optional<int> phases;
};

/// Phase-averaged trajectory: trajectory.csv + trajectory.json.
int cmd_simulate(const CommandOptions& opt, std::ostream& out, std::ostream& err);
/// Sweep from the config's sweep section: sweep.csv + sweep.json.
int cmd_sweep(const CommandOptions& opt, std::ostream& out, std::ostream& err);
/// figure in {fig2, fig3, fig4, fig4-inset}; writes into out_dir/<figure>/.
int cmd_reproduce(const std::string& figure, const CommandOptions& opt, std::ostream& out, std::ostream& err);
/// Fits dephasing times to an observed t_ns,p2 table; writes fit_report.json.
int cmd_fit(const std::string& csv_path, const std::vector<std::string>& free, const CommandOptions& opt,
            std::ostream& out, std::ostream& err);

/// Preset for a figure name; throws ConfigError for an unknown name.
RunConfig figure_preset(const std::string& figure);

// Pipelines. Each writes its datasets under `out_dir` (nothing when empty)
// and returns the summary document.
Json reproduce_fig2(const RunConfig& cfg, int jobs, const std::string& out_dir);
Json reproduce_fig3(const RunConfig& cfg, int jobs, const std::string& out_dir);
Json reproduce_fig4(const RunConfig& cfg, int jobs, const std::string& out_dir);
Json reproduce_fig4_inset(const RunConfig& cfg, int jobs, const std::string& out_dir);

/// Per-fp alignment of the P2 minimum over fc with the line 2 fp - fc = f01.
struct TrenchReport {
  int columns = 0;  // fp lines inside the probe stripe (median P2 >= half the largest median)
  int aligned = 0;  // of those, minima within one fc grid step of the line
  double fraction = 0.0;
  double mean_offset_ghz = 0.0;  // mean (fc_min - fc_line) over counted columns
};
TrenchReport trench_alignment(const SweepResult& r, double f01);

/// Coupling frequency used as "on CPT resonance" in the duration pipelines.
double dark_resonance_fc(const RunConfig& cfg, int jobs);

}  // namespace cpt
