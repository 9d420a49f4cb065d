#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cpt/analysis.hpp"
#include "cpt/commands.hpp"
#include "cpt/presets.hpp"
#include "cpt/serialization.hpp"

using namespace cpt;

namespace {

std::string fresh_dir(const std::string& name) {
  const std::string dir = std::string(CPT_TEST_TMP) + "/" + name;
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

CsvTable read_table(const std::string& path) {
  std::ifstream in(path);
  return read_csv(in, path);
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("simulate with the default config stays in the ground state") {
  CommandOptions opt;
  opt.out_dir = fresh_dir("sim_default");
  std::ostringstream out, err;
  REQUIRE(cmd_simulate(opt, out, err) == kExitOk);
  const CsvTable t = read_table(opt.out_dir + "/trajectory.csv");
  REQUIRE(!t.rows.empty());
  for (const auto& row : t.rows) CHECK(row[t.column("p0")] == 1.0);
  CHECK(std::filesystem::exists(opt.out_dir + "/trajectory.json"));
}

TEST_CASE("simulate matches the library bit for bit") {
  CommandOptions opt;
  opt.out_dir = fresh_dir("sim_fig2");
  opt.overrides = {"drive.omega_p01_mhz=48", "drive.omega_c12_mhz=32", "drive.fp_ghz=6.035", "drive.fc_ghz=5.865",
                   "integrator.positivity_tolerance=0.001", "integrator.phases=4"};
  std::ostringstream out, err;
  REQUIRE(cmd_simulate(opt, out, err) == kExitOk);
  const CsvTable t = read_table(opt.out_dir + "/trajectory.csv");

  const RunConfig cfg = build_config(to_json(RunConfig{}), opt.overrides, "cfg");
  const auto& c = cfg.context;
  const auto traj = phase_averaged_populations(c.initial, c.device, c.drive, c.decoherence, c.integrator, c.n_phases);
  CHECK(t.rows.back()[t.column("p2")] == traj.final_state().population(2));
  CHECK(t.rows.back()[t.column("t_ns")] == 30.0);
}

TEST_CASE("input errors exit with 2") {
  std::ostringstream out, err;
  CommandOptions opt;
  opt.out_dir = fresh_dir("errors");
  opt.config_path = "missing/run.json";
  CHECK(cmd_simulate(opt, out, err) == kExitInput);
  CHECK(err.str().find("missing/run.json") != std::string::npos);

  opt.config_path.reset();
  const std::string empty = opt.out_dir + "/empty.csv";
  std::ofstream(empty).close();
  CHECK(cmd_fit(empty, {"tphi_01"}, opt, out, err) == kExitInput);

  const std::string header_only = opt.out_dir + "/header.csv";
  std::ofstream(header_only) << "t_ns,p2\n";
  CHECK(cmd_fit(header_only, {"tphi_01"}, opt, out, err) == kExitInput);
  CHECK(cmd_fit(header_only, {}, opt, out, err) == kExitInput);
  CHECK(cmd_fit(header_only, {"tphi_99"}, opt, out, err) == kExitInput);

  opt.overrides = {"drive.t0_ns=-3"};
  CHECK(cmd_simulate(opt, out, err) == kExitInput);
  CHECK(cmd_reproduce("fig9", CommandOptions{}, out, err) == kExitInput);
}

TEST_CASE("unphysical states exit with 3") {
  std::ostringstream out, err;
  CommandOptions opt;
  opt.out_dir = fresh_dir("physics");
  opt.overrides = {"drive.omega_p01_mhz=48", "drive.omega_c12_mhz=32", "decoherence.tphi_02_ns=2",
                   "integrator.positivity_tolerance=1e-7", "integrator.phases=1"};
  CHECK(cmd_simulate(opt, out, err) == kExitPhysics);
}

TEST_CASE("sweep writes tables") {
  std::ostringstream out, err;
  CommandOptions opt;
  opt.out_dir = fresh_dir("sweep");
  opt.overrides = {"drive.omega_p01_mhz=48", "drive.omega_c12_mhz=32", "drive.t0_ns=5",
                   "decoherence.tphi_02_ns=12", "integrator.phases=2",
                   R"(sweep={"axis1": {"param": "fp", "start": 6.0, "stop": 6.06, "n_points": 3}})"};
  REQUIRE(cmd_sweep(opt, out, err) == kExitOk);
  const CsvTable t = read_table(opt.out_dir + "/sweep.csv");
  CHECK(t.columns == std::vector<std::string>{"fp", "p2", "p1", "p3"});
  CHECK(t.rows.size() == 3);
  CHECK(t.metadata["schema_version"] == kSchemaVersion);
  CHECK(std::filesystem::exists(opt.out_dir + "/sweep.json"));

  opt.overrides.pop_back();
  CHECK(cmd_sweep(opt, out, err) == kExitInput);
}

TEST_CASE("fit round trip through files") {
  RunConfig cfg = preset_fig3();
  cfg.context.drive.fc = 5.8254688;
  cfg.sweep.reset();
  cfg.measurement.reset();
  SimulationContext gen = cfg.context;
  gen.decoherence.tphi_01 = 25;
  std::vector<double> t;
  for (int i = 0; i <= 40; ++i) t.push_back(2.0 * i);
  const auto p = p2_vs_duration(gen, t);

  CsvTable obs;
  obs.metadata = output_metadata("observed", cfg);
  obs.columns = {"t_ns", "p2"};
  for (std::size_t i = 0; i < t.size(); ++i) obs.rows.push_back({t[i], p[i]});
  const std::string dir = fresh_dir("fit");
  write_file(dir + "/observed.csv", csv_text(obs));

  CommandOptions opt;
  opt.out_dir = dir;
  std::ostringstream out, err;
  REQUIRE(cmd_fit(dir + "/observed.csv", {"tphi_01"}, opt, out, err) == kExitOk);
  std::ifstream in(dir + "/fit_report.json");
  const Json report = Json::parse(in);
  CHECK(report["parameters"][0]["name"] == "tphi_01");
  CHECK(report["parameters"][0]["value"].get<double>() == doctest::Approx(25.0).epsilon(0.02));
  CHECK(report["converged"] == true);
}

}
