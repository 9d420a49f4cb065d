#include "cpt/commands.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "cpt/analysis.hpp"
#include "cpt/presets.hpp"
#include "cpt/serialization.hpp"

namespace cpt {

namespace {

namespace fs = std::filesystem;

constexpr std::array<double, 3> kFig4TphiValues{6.0, 12.0, 25.0};
constexpr double kDarkSearchHalfWidth = 0.05;  // GHz around f12
constexpr double kNotchHalfWindow = 0.1;       // GHz around the dark resonance

std::string join(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

void emit(const std::string& out_dir, const std::string& name, const std::string& text) {
  if (!out_dir.empty()) write_file(join(out_dir, name), text);
}

std::vector<std::string> all_overrides(const CommandOptions& opt) {
  std::vector<std::string> o = opt.overrides;
  if (opt.seed) o.push_back("seed=" + std::to_string(*opt.seed));
  if (opt.dt) o.push_back("integrator.dt_ns=" + format_double(*opt.dt));
  if (opt.phases) o.push_back("integrator.phases=" + std::to_string(*opt.phases));
  return o;
}

RunConfig resolve_config(const CommandOptions& opt, const std::optional<Json>& fallback = std::nullopt) {
  if (opt.config_path) return load_config(*opt.config_path, all_overrides(opt));
  return build_config(fallback.value_or(to_json(RunConfig{})), all_overrides(opt), "config");
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const ParameterError& e) {
    err << "error: invalid parameter: " << e.what() << "\n";
    return kExitInput;
  } catch (const PositivityError& e) {
    err << "error: " << e.what() << "\n";
    return kExitPhysics;
  } catch (const SweepPointError& e) {
    err << "error: " << e.what() << "\n";
    return e.physics() ? kExitPhysics : kExitInput;
  } catch (const FitError& e) {
    err << "error: fit failed: " << e.what() << "\n";
    return kExitFit;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

Json run_info(double seconds, int jobs) {
  return Json{{"schema_version", kSchemaVersion}, {"tool_version", CPT_VERSION}, {"wall_seconds", seconds},
              {"jobs", jobs}};
}

double max_coeff(const Eigen::MatrixXd& m) { return m.size() ? m.maxCoeff() : 0.0; }

std::vector<double> t0_grid(const RunConfig& cfg) {
  if (cfg.sweep) {
    if (cfg.sweep->axis1.id == Axis::t0) return cfg.sweep->axis1.values();
    if (cfg.sweep->axis2 && cfg.sweep->axis2->id == Axis::t0) return cfg.sweep->axis2->values();
  }
  return AxisSpec{Axis::t0, 0.0, cfg.context.drive.t0, 81}.values();
}

}  // namespace

RunConfig figure_preset(const std::string& figure) {
  if (figure == "fig2") return preset_fig2();
  if (figure == "fig3" || figure == "fig4" || figure == "fig4-inset") return preset_fig3();
  throw ConfigError("unknown figure '" + figure + "' (expected fig2, fig3, fig4 or fig4-inset)");
}

TrenchReport trench_alignment(const SweepResult& r, double f01) {
  if (!r.axis2) throw DomainError("trench alignment needs a two-dimensional sweep");
  const bool fp_rows = r.axis1.id == Axis::fp && r.axis2->id == Axis::fc;
  const bool fc_rows = r.axis1.id == Axis::fc && r.axis2->id == Axis::fp;
  if (!fp_rows && !fc_rows) throw DomainError("trench alignment needs an fp x fc sweep");
  const std::vector<double>& fps = fp_rows ? r.axis1_values : r.axis2_values;
  const std::vector<double>& fcs = fp_rows ? r.axis2_values : r.axis1_values;
  const double fc_step = std::abs(fcs[1] - fcs[0]);
  auto median = [](std::vector<double> v) {
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2), v.end());
    return v[v.size() / 2];
  };
  std::vector<std::vector<double>> lines(fps.size(), std::vector<double>(fcs.size()));
  double stripe = 0.0;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    for (std::size_t j = 0; j < fcs.size(); ++j) {
      lines[i][j] = fp_rows ? r.p2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                            : r.p2(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    }
    stripe = std::max(stripe, median(lines[i]));
  }

  TrenchReport rep;
  double offset_sum = 0.0;
  for (std::size_t i = 0; i < fps.size(); ++i) {
    const std::vector<double>& line = lines[i];
    const double fc_line = 2.0 * fps[i] - f01;
    if (fc_line < fcs.front() + fc_step || fc_line > fcs.back() - fc_step) continue;
    if (median(line) < 0.5 * stripe) continue;
    const auto at = static_cast<std::size_t>(std::distance(line.begin(), std::min_element(line.begin(), line.end())));
    const double offset = fcs[at] - fc_line;
    ++rep.columns;
    offset_sum += offset;
    if (std::abs(offset) <= fc_step * (1.0 + 1e-9)) ++rep.aligned;
  }
  if (rep.columns > 0) {
    rep.fraction = static_cast<double>(rep.aligned) / rep.columns;
    rep.mean_offset_ghz = offset_sum / rep.columns;
  }
  return rep;
}

double dark_resonance_fc(const RunConfig& cfg, int jobs) {
  SimulationContext ctx = cfg.context;
  ctx.drive.t0 = kInsetT0;
  const double f12 = ctx.device.f12;
  return locate_dark_resonance(ctx, f12 - kDarkSearchHalfWidth, f12 + kDarkSearchHalfWidth, jobs).fc;
}

Json reproduce_fig2(const RunConfig& cfg, int jobs, const std::string& out_dir) {
  const SweepResult r = run_sweep(make_sweep_spec(cfg, jobs));
  const Json meta = output_metadata("sweep", cfg);
  emit(out_dir, "sweep.csv", csv_text(sweep_table(r, meta)));
  emit(out_dir, "sweep.json", json_text(sweep_json(r, meta)));

  const Series on = cut(r, Axis::fc, kFig2OnResonanceFc);
  const Series off = cut(r, Axis::fc, kFig2OffResonanceFc);
  emit(out_dir, "cut_on.csv", csv_text(series_table(on, "p2", output_metadata("cut", cfg))));
  emit(out_dir, "cut_off.csv", csv_text(series_table(off, "p2", output_metadata("cut", cfg))));

  Json summary = output_metadata("fig2_summary", cfg);
  summary.erase("config");
  const ContrastResult contrast = parabolic_contrast(on, off);
  summary["contrast"] = to_json(contrast);
  summary["contrast"]["fc_on_ghz"] = on.fixed_value;
  summary["contrast"]["fc_off_ghz"] = off.fixed_value;

  const LorentzianFit lw = linewidth_fit(off, Polarity::peak);
  summary["linewidth"] = to_json(lw);
  summary["linewidth"]["fc_ghz"] = off.fixed_value;
  try {
    summary["linewidth"]["tphi_02_implied_ns"] = tphi_02_from_fwhm(lw.fwhm_mhz(), cfg.context.decoherence.t1_21);
  } catch (const DomainError&) {
    summary["linewidth"]["tphi_02_implied_ns"] = nullptr;
  }
  Json nearby = Json::array();
  for (double fc : r.axis2_values) {
    if (r.axis2->id != Axis::fc || fc > kFig2OffResonanceFc + 0.02) continue;
    try {
      nearby.push_back({{"fc_ghz", fc}, {"fwhm_mhz", linewidth_fit(cut(r, Axis::fc, fc), Polarity::peak).fwhm_mhz()}});
    } catch (const FitError&) {
      nearby.push_back({{"fc_ghz", fc}, {"fwhm_mhz", nullptr}});
    }
  }
  summary["linewidth"]["nearby_cuts"] = nearby;

  const DecoherenceParams& dec = cfg.context.decoherence;
  summary["gamma_02_mhz"] = gamma_02_mhz(dec);
  summary["gamma_01_mhz"] = gamma_01_mhz(dec);

  const TrenchReport trench = trench_alignment(r, cfg.context.device.f01);
  summary["trench"] = {{"columns", trench.columns}, {"aligned", trench.aligned}, {"fraction", trench.fraction},
                       {"mean_offset_ghz", trench.mean_offset_ghz}};
  summary["max_p3"] = max_coeff(r.p3);

  const double omega_c_mhz = mhz_from_angular(cfg.context.drive.omega_c12);
  const AtOnlySpread at = at_only_spread(dec, omega_c_mhz);
  summary["at_only"] = {{"omega_c_mhz", omega_c_mhz}, {"nominal", at.nominal}, {"low", at.low}, {"high", at.high},
                        {"tphi_02_ns", at.tphi_02_ns}, {"contrast", at.contrast}};
  summary["dephasing_completely_positive"] = dec.dephasing_completely_positive();
  summary["stats"] = to_json(r.metadata.stats);

  if (cfg.measurement) {
    SweepResult measured = r;
    apply_shot_noise(measured, *cfg.measurement, cfg.seed);
    emit(out_dir, "sweep_measured.csv", csv_text(sweep_table(measured, output_metadata("sweep_measured", cfg))));
  }
  emit(out_dir, "summary.json", json_text(summary));
  return summary;
}

Json reproduce_fig3(const RunConfig& cfg, int jobs, const std::string& out_dir) {
  const double fc_dark = dark_resonance_fc(cfg, jobs);
  const SweepResult r = run_sweep(make_sweep_spec(cfg, jobs));
  const Json meta = output_metadata("sweep", cfg);
  emit(out_dir, "sweep.csv", csv_text(sweep_table(r, meta)));
  emit(out_dir, "sweep.json", json_text(sweep_json(r, meta)));

  const Series on = cut(r, Axis::fc, fc_dark);
  const Series off = cut(r, Axis::fc, fc_dark - kFig4OffResonanceDetuning);
  emit(out_dir, "cut_on.csv", csv_text(series_table(on, "p2", output_metadata("cut", cfg))));
  emit(out_dir, "cut_off.csv", csv_text(series_table(off, "p2", output_metadata("cut", cfg))));
  for (double t0 : {10.0, 20.0, 40.0}) {
    const Series s = cut(r, Axis::t0, t0);
    emit(out_dir, "cut_t0_" + format_double(s.fixed_value) + ".csv",
         csv_text(series_table(s, "p2", output_metadata("cut", cfg))));
  }

  // Suppression of P2 on the dark resonance relative to the off-resonance cut.
  CsvTable supp;
  supp.metadata = output_metadata("suppression", cfg);
  supp.columns = {"t0", "p2_on", "p2_off", "suppression"};
  double best = -kInfiniteTime, best_t0 = 0.0;
  for (std::size_t i = 0; i < on.x.size(); ++i) {
    if (off.y[i] < 1e-2) continue;
    const double s = 1.0 - on.y[i] / off.y[i];
    supp.rows.push_back({on.x[i], on.y[i], off.y[i], s});
    if (s > best) {
      best = s;
      best_t0 = on.x[i];
    }
  }
  emit(out_dir, "suppression.csv", csv_text(supp));

  Json summary = output_metadata("fig3_summary", cfg);
  summary.erase("config");
  summary["dark_resonance_fc_ghz"] = fc_dark;
  summary["fc_on_ghz"] = on.fixed_value;
  summary["fc_off_ghz"] = off.fixed_value;
  summary["max_suppression"] = best;
  summary["t0_at_max_suppression_ns"] = best_t0;

  // Width of the EIT notch in fc over the early part of the pulse.
  Json notch = Json::array();
  bool monotone = true;
  double previous = kInfiniteTime;
  for (double t0 : r.axis2_values) {
    if (r.axis2->id != Axis::t0 || t0 < 5.0 - 1e-9 || t0 > 20.0 + 1e-9) continue;
    const Series s = window(cut(r, Axis::t0, t0), fc_dark, kNotchHalfWindow);
    try {
      const LorentzianFit f = linewidth_fit(s, Polarity::dip, true);
      // A notch wider than the window or centred outside it has not formed.
      const bool resolved = f.amplitude < 0.0 && std::abs(f.center - fc_dark) <= kNotchHalfWindow &&
                            f.fwhm <= 2.0 * kNotchHalfWindow;
      notch.push_back({{"t0_ns", t0}, {"fwhm_mhz", f.fwhm_mhz()}, {"center_ghz", f.center}, {"depth", -f.amplitude},
                       {"resolved", resolved}});
      if (!resolved || !(f.fwhm < previous)) monotone = false;
      previous = resolved ? f.fwhm : kInfiniteTime;
    } catch (const FitError& e) {
      notch.push_back({{"t0_ns", t0}, {"fwhm_mhz", nullptr}, {"resolved", false}, {"error", e.what()}});
      monotone = false;
    }
  }
  summary["notch"] = notch;
  summary["notch_narrows_monotonically"] = monotone;
  summary["max_p3"] = max_coeff(r.p3);
  summary["stats"] = to_json(r.metadata.stats);

  if (cfg.measurement) {
    SweepResult measured = r;
    apply_shot_noise(measured, *cfg.measurement, cfg.seed);
    emit(out_dir, "sweep_measured.csv", csv_text(sweep_table(measured, output_metadata("sweep_measured", cfg))));
  }
  emit(out_dir, "summary.json", json_text(summary));
  return summary;
}

Json reproduce_fig4(const RunConfig& cfg, int jobs, const std::string& out_dir) {
  const double fc_dark = dark_resonance_fc(cfg, jobs);
  const std::vector<double> times = t0_grid(cfg);

  Json summary = output_metadata("fig4_summary", cfg);
  summary.erase("config");
  summary["dark_resonance_fc_ghz"] = fc_dark;
  summary["fc_off_ghz"] = fc_dark - kFig4OffResonanceDetuning;
  summary["tphi_01_ns"] = kFig4TphiValues;

  double max_p3 = 0.0;
  for (const auto& [name, fc] : {std::pair{std::string("on"), fc_dark},
                                 std::pair{std::string("off"), fc_dark - kFig4OffResonanceDetuning}}) {
    CsvTable t;
    t.metadata = output_metadata("time_cut", cfg);
    t.metadata["fc_ghz"] = fc;
    t.columns = {"t_ns"};
    for (double tphi : kFig4TphiValues) t.columns.push_back("p2_tphi01_" + format_double(tphi));
    std::vector<std::vector<std::array<double, 4>>> traces(kFig4TphiValues.size());
    for (std::size_t k = 0; k < kFig4TphiValues.size(); ++k) {
      SimulationContext ctx = cfg.context;
      ctx.drive.fc = fc;
      ctx.decoherence.tphi_01 = kFig4TphiValues[k];
      traces[k] = populations_vs_duration(ctx, times);
    }
    Json finals = Json::array();
    for (std::size_t i = 0; i < times.size(); ++i) {
      std::vector<double> row{times[i]};
      for (const auto& tr : traces) {
        row.push_back(tr[i][2]);
        max_p3 = std::max(max_p3, tr[i][3]);
      }
      t.rows.push_back(std::move(row));
    }
    for (const auto& tr : traces) finals.push_back(tr.back()[2]);
    summary["final_p2_" + name] = finals;
    emit(out_dir, "time_" + name + ".csv", csv_text(t));
  }
  summary["max_p3"] = max_p3;

  // Synthetic observation at the configured tphi_01, through the readout model.
  SimulationContext ctx = cfg.context;
  ctx.drive.fc = fc_dark;
  const std::vector<double> truth = p2_vs_duration(ctx, times);
  const MeasurementModel m = cfg.measurement.value_or(MeasurementModel{});
  CsvTable obs;
  RunConfig obs_cfg = cfg;
  obs_cfg.context.drive.fc = fc_dark;
  obs.metadata = output_metadata("observed", obs_cfg);
  obs.columns = {"t_ns", "p2"};
  for (std::size_t i = 0; i < times.size(); ++i) {
    auto rng = point_rng(cfg.seed, i);
    obs.rows.push_back({times[i], invert_measurement(apply_measurement(std::clamp(truth[i], 0.0, 1.0), m, rng), m)});
  }
  emit(out_dir, "observed_on.csv", csv_text(obs));
  emit(out_dir, "summary.json", json_text(summary));
  return summary;
}

Json reproduce_fig4_inset(const RunConfig& cfg, int jobs, const std::string& out_dir) {
  const double fc_dark = dark_resonance_fc(cfg, jobs);
  SimulationContext ctx = cfg.context;
  ctx.drive.fc = fc_dark;

  std::vector<double> tphi;
  constexpr int kPoints = 25;
  for (int i = 0; i < kPoints; ++i) tphi.push_back(std::pow(10.0, 3.0 * i / (kPoints - 1)));
  tphi.push_back(kInfiniteTime);
  const std::vector<double> p2 = sensitivity_curve(ctx, kInsetT0, tphi, jobs);

  SimulationContext off_ctx = ctx;
  off_ctx.drive.fc = fc_dark - kFig4OffResonanceDetuning;
  const double at[1] = {kInsetT0};
  const double off_level = p2_vs_duration(off_ctx, at).front();

  bool monotone = true;
  std::size_t tail_start = 0;
  for (std::size_t i = 1; i < p2.size(); ++i) {
    if (p2[i] > p2[i - 1]) {
      monotone = false;
      tail_start = i;
    }
  }

  CsvTable t;
  t.metadata = output_metadata("sensitivity", cfg);
  t.metadata["fc_ghz"] = fc_dark;
  t.metadata["t0_ns"] = kInsetT0;
  t.metadata["p2_off_resonance"] = off_level;
  t.columns = {"tphi_01_ns", "p2"};
  for (std::size_t i = 0; i < tphi.size(); ++i) t.rows.push_back({tphi[i], p2[i]});
  emit(out_dir, "inset.csv", csv_text(t));

  Json summary = output_metadata("fig4_inset_summary", cfg);
  summary.erase("config");
  summary["dark_resonance_fc_ghz"] = fc_dark;
  summary["t0_ns"] = kInsetT0;
  summary["asymptote_p2"] = p2.back();
  summary["p2_at_1000ns"] = p2[p2.size() - 2];
  summary["p2_off_resonance"] = off_level;
  summary["monotone_nonincreasing"] = monotone;
  summary["monotone_from_tphi_01_ns"] = tphi[tail_start];
  emit(out_dir, "summary.json", json_text(summary));
  return summary;
}

int cmd_simulate(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const RunConfig cfg = resolve_config(opt);
    const auto& c = cfg.context;
    const Trajectory traj = phase_averaged_populations(c.initial, c.device, c.drive, c.decoherence, c.integrator,
                                                       c.n_phases);
    const Json meta = output_metadata("trajectory", cfg);
    write_file(join(opt.out_dir, "trajectory.csv"), csv_text(trajectory_table(traj, meta)));
    Json side = meta;
    side["stats"] = to_json(traj.stats);
    side["final_populations"] = traj.populations(traj.size() - 1);
    write_file(join(opt.out_dir, "trajectory.json"), json_text(side));
    out << "wrote " << join(opt.out_dir, "trajectory.csv") << "\n";
    return kExitOk;
  });
}

int cmd_sweep(const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const RunConfig cfg = resolve_config(opt);
    const SweepResult r = run_sweep(make_sweep_spec(cfg, opt.jobs));
    const Json meta = output_metadata("sweep", cfg);
    write_file(join(opt.out_dir, "sweep.csv"), csv_text(sweep_table(r, meta)));
    write_file(join(opt.out_dir, "sweep.json"), json_text(sweep_json(r, meta)));
    write_file(join(opt.out_dir, "run_info.json"), json_text(run_info(r.metadata.wall_seconds, opt.jobs)));
    out << "wrote " << join(opt.out_dir, "sweep.csv") << " (" << r.metadata.wall_seconds << " s)\n";
    return kExitOk;
  });
}

int cmd_reproduce(const std::string& figure, const CommandOptions& opt, std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    const RunConfig preset = figure_preset(figure);
    const RunConfig cfg = resolve_config(opt, to_json(preset));
    const std::string dir = join(opt.out_dir, figure);
    const auto started = std::chrono::steady_clock::now();
    Json summary;
    if (figure == "fig2") {
      summary = reproduce_fig2(cfg, opt.jobs, dir);
    } else if (figure == "fig3") {
      summary = reproduce_fig3(cfg, opt.jobs, dir);
    } else if (figure == "fig4") {
      summary = reproduce_fig4(cfg, opt.jobs, dir);
    } else {
      summary = reproduce_fig4_inset(cfg, opt.jobs, dir);
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    write_file(join(dir, "run_info.json"), json_text(run_info(seconds, opt.jobs)));
    out << "wrote " << dir << " (" << seconds << " s)\n";
    return kExitOk;
  });
}

int cmd_fit(const std::string& csv_path, const std::vector<std::string>& free, const CommandOptions& opt,
            std::ostream& out, std::ostream& err) {
  return guarded(err, [&]() {
    if (free.empty()) throw ConfigError("no free parameters given (use --free tphi_01 ...)");
    std::vector<DephasingParam> params;
    for (const auto& f : free) {
      try {
        params.push_back(parse_param(f));
      } catch (const ParameterError& e) {
        throw ConfigError(e.what());
      }
    }
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("cannot open observed data " + csv_path);
    const CsvTable table = read_csv(in, csv_path);
    if (table.rows.empty()) throw ConfigError(csv_path + ": no data rows");
    const std::size_t t_col = table.column("t_ns");
    const std::size_t p_col = table.column("p2");

    std::optional<Json> embedded;
    if (table.metadata.contains("config") && table.metadata["config"].is_object()) embedded = table.metadata["config"];
    const RunConfig cfg = resolve_config(opt, embedded);

    std::vector<double> t, p;
    for (const auto& row : table.rows) {
      t.push_back(row[t_col]);
      p.push_back(row[p_col]);
    }
    FitOptions fo;
    fo.jobs = opt.jobs;
    FitReport report;
    try {
      report = fit_dephasing(t, p, cfg.context, params, fo);
    } catch (const ParameterError& e) {
      throw ConfigError(e.what());
    }
    write_file(join(opt.out_dir, "fit_report.json"), json_text(to_json(report)));
    for (const auto& prm : report.parameters) {
      out << prm.name << " = " << prm.value << " +- " << prm.uncertainty << " " << prm.unit << "\n";
    }
    if (report.flat_residual) out << "warning: residual is flat in at least one parameter\n";
    if (!report.converged) {
      err << "error: fit did not converge after " << report.iterations << " iterations\n";
      return kExitFit;
    }
    return kExitOk;
  });
}

}  // namespace cpt
