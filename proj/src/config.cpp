#include "cpt/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace cpt {

namespace {

// omega / 2 pi in MHz, nudged by a few ulps so that it maps back to exactly
// the same rad/ns value.
double exact_mhz(double omega) {
  const double guess = mhz_from_angular(omega);
  double down = guess, up = guess;
  for (int k = 0; k < 8; ++k) {
    if (angular_from_mhz(down) == omega) return down;
    if (angular_from_mhz(up) == omega) return up;
    down = std::nextafter(down, -kInfiniteTime);
    up = std::nextafter(up, kInfiniteTime);
  }
  return guess;
}

Json time_json(double t) { return std::isinf(t) ? Json("inf") : Json(t); }

class Reader {
 public:
  Reader(const Json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (!obj_.is_object()) throw ConfigError(where() + " must be an object");
  }

  std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const Json* find(const std::string& key) {
    used_.insert(key);
    auto it = obj_.find(key);
    return it == obj_.end() ? nullptr : &*it;
  }

  double number(const std::string& key, double fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number()) throw ConfigError(key_path(key) + " must be a number");
    return v->get<double>();
  }

  double time(const std::string& key, double fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    return parse_time(*v, key);
  }

  std::optional<double> optional_time(const std::string& key, std::optional<double> fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (v->is_null()) return std::nullopt;
    return parse_time(*v, key);
  }

  std::optional<double> optional_number(const std::string& key, std::optional<double> fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (v->is_null()) return std::nullopt;
    if (!v->is_number()) throw ConfigError(key_path(key) + " must be a number or null");
    return v->get<double>();
  }

  long long integer(const std::string& key, long long fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_number_integer()) throw ConfigError(key_path(key) + " must be an integer");
    return v->get<long long>();
  }

  bool boolean(const std::string& key, bool fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_boolean()) throw ConfigError(key_path(key) + " must be true or false");
    return v->get<bool>();
  }

  std::string string(const std::string& key, const std::string& fallback) {
    const Json* v = find(key);
    if (!v) return fallback;
    if (!v->is_string()) throw ConfigError(key_path(key) + " must be a string");
    return v->get<std::string>();
  }

  void finish() const {
    for (auto it = obj_.begin(); it != obj_.end(); ++it) {
      if (!used_.count(it.key())) throw ConfigError("unknown key " + key_path(it.key()));
    }
  }

 private:
  std::string where() const { return path_.empty() ? "config" : path_; }

  double parse_time(const Json& v, const std::string& key) const {
    if (v.is_string()) {
      const auto s = v.get<std::string>();
      if (s == "inf" || s == "infinity") return kInfiniteTime;
      throw ConfigError(key_path(key) + " must be a number of ns or \"inf\"");
    }
    if (!v.is_number()) throw ConfigError(key_path(key) + " must be a number of ns or \"inf\"");
    return v.get<double>();
  }

  const Json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

DeviceParams read_device(const Json& j) {
  Reader r(j, "device");
  DeviceParams d;
  d.f01 = r.number("f01_ghz", d.f01);
  d.f12 = r.number("f12_ghz", d.f12);
  d.f23_override = r.optional_number("f23_ghz", d.f23_override);
  if (const Json* dip = r.find("dipole")) {
    if (!dip->is_array() || dip->size() != 3) throw ConfigError("device.dipole must be an array of 3 numbers");
    for (std::size_t i = 0; i < 3; ++i) {
      if (!(*dip)[i].is_number()) throw ConfigError("device.dipole must be an array of 3 numbers");
      d.dipole[i] = (*dip)[i].get<double>();
    }
  }
  r.finish();
  return d;
}

Envelope read_envelope(const Json& j) {
  Reader r(j, "drive.envelope");
  Envelope e;
  const std::string shape = r.string("shape", "rectangular");
  if (shape == "rectangular") {
    e.shape = EnvelopeShape::rectangular;
  } else if (shape == "linear_ramp") {
    e.shape = EnvelopeShape::linear_ramp;
  } else {
    throw ConfigError("drive.envelope.shape must be \"rectangular\" or \"linear_ramp\"");
  }
  e.ramp_ns = r.number("ramp_ns", e.ramp_ns);
  r.finish();
  return e;
}

DriveParams read_drive(const Json& j) {
  Reader r(j, "drive");
  DriveParams d;
  d.fp = r.number("fp_ghz", d.fp);
  d.fc = r.number("fc_ghz", d.fc);
  d.omega_p01 = angular_from_mhz(r.number("omega_p01_mhz", exact_mhz(d.omega_p01)));
  d.omega_c12 = angular_from_mhz(r.number("omega_c12_mhz", exact_mhz(d.omega_c12)));
  d.rel_phase = r.number("rel_phase_rad", d.rel_phase);
  d.t0 = r.number("t0_ns", d.t0);
  if (const Json* env = r.find("envelope")) d.envelope = read_envelope(*env);
  r.finish();
  return d;
}

DecoherenceParams read_decoherence(const Json& j) {
  Reader r(j, "decoherence");
  DecoherenceParams d;
  d.t1_10 = r.time("t1_10_ns", d.t1_10);
  d.t1_21 = r.time("t1_21_ns", d.t1_21);
  d.t1_32_override = r.optional_time("t1_32_ns", d.t1_32_override);
  d.tphi_01 = r.time("tphi_01_ns", d.tphi_01);
  d.tphi_02 = r.time("tphi_02_ns", d.tphi_02);
  d.tphi_12 = r.time("tphi_12_ns", d.tphi_12);
  d.tphi_3x_override = r.optional_time("tphi_3x_ns", d.tphi_3x_override);
  r.finish();
  return d;
}

void read_integrator(const Json& j, SimulationContext& ctx) {
  Reader r(j, "integrator");
  IntegratorConfig& c = ctx.integrator;
  c.dt = r.number("dt_ns", c.dt);
  c.record_stride = static_cast<int>(r.integer("record_stride", c.record_stride));
  ctx.n_phases = static_cast<int>(r.integer("phases", ctx.n_phases));
  c.positivity_check = r.boolean("positivity_check", c.positivity_check);
  c.positivity_tolerance = r.number("positivity_tolerance", c.positivity_tolerance);
  c.rwa_cutoff_ghz = r.number("rwa_cutoff_ghz", c.rwa_cutoff_ghz);
  r.finish();
}

AxisSpec read_axis(const Json& j, const std::string& path) {
  Reader r(j, path);
  AxisSpec a;
  try {
    a.id = parse_axis(r.string("param", ""));
  } catch (const ParameterError& e) {
    throw ConfigError(path + ".param: " + e.what());
  }
  if (!r.find("start") || !r.find("stop")) throw ConfigError(path + " needs start and stop");
  a.start = r.number("start", 0.0);
  a.stop = r.number("stop", 0.0);
  a.n_points = static_cast<int>(r.integer("n_points", 2));
  r.finish();
  return a;
}

SweepSection read_sweep(const Json& j) {
  Reader r(j, "sweep");
  SweepSection s;
  const Json* a1 = r.find("axis1");
  if (!a1) throw ConfigError("sweep.axis1 is required");
  s.axis1 = read_axis(*a1, "sweep.axis1");
  if (const Json* a2 = r.find("axis2"); a2 && !a2->is_null()) s.axis2 = read_axis(*a2, "sweep.axis2");
  s.shot_noise = r.boolean("shot_noise", s.shot_noise);
  r.finish();
  return s;
}

MeasurementModel read_measurement(const Json& j) {
  Reader r(j, "measurement");
  MeasurementModel m;
  m.fidelity = r.number("fidelity", m.fidelity);
  m.background = r.number("background", m.background);
  m.trials = static_cast<int>(r.integer("trials", m.trials));
  r.finish();
  return m;
}

// Line of the first occurrence of "key" in the text, or 0.
int line_of_key(const std::string& text, const std::string& dotted) {
  const auto dot = dotted.rfind('.');
  const std::string key = "\"" + (dot == std::string::npos ? dotted : dotted.substr(dot + 1)) + "\"";
  const auto pos = text.find(key);
  if (pos == std::string::npos) return 0;
  int line = 1;
  for (std::size_t i = 0; i < pos; ++i) line += text[i] == '\n';
  return line;
}

}  // namespace

Json to_json(const DeviceParams& d) {
  Json j;
  j["f01_ghz"] = d.f01;
  j["f12_ghz"] = d.f12;
  j["f23_ghz"] = d.f23_override ? Json(*d.f23_override) : Json(nullptr);
  j["dipole"] = Json::array({d.dipole[0], d.dipole[1], d.dipole[2]});
  return j;
}

Json to_json(const DriveParams& d) {
  Json j;
  j["fp_ghz"] = d.fp;
  j["fc_ghz"] = d.fc;
  j["omega_p01_mhz"] = exact_mhz(d.omega_p01);
  j["omega_c12_mhz"] = exact_mhz(d.omega_c12);
  j["rel_phase_rad"] = d.rel_phase;
  j["t0_ns"] = d.t0;
  j["envelope"] = {{"shape", d.envelope.shape == EnvelopeShape::rectangular ? "rectangular" : "linear_ramp"},
                   {"ramp_ns", d.envelope.ramp_ns}};
  return j;
}

Json to_json(const DecoherenceParams& d) {
  Json j;
  j["t1_10_ns"] = time_json(d.t1_10);
  j["t1_21_ns"] = time_json(d.t1_21);
  j["t1_32_ns"] = d.t1_32_override ? time_json(*d.t1_32_override) : Json(nullptr);
  j["tphi_01_ns"] = time_json(d.tphi_01);
  j["tphi_02_ns"] = time_json(d.tphi_02);
  j["tphi_12_ns"] = time_json(d.tphi_12);
  j["tphi_3x_ns"] = d.tphi_3x_override ? time_json(*d.tphi_3x_override) : Json(nullptr);
  return j;
}

Json to_json(const IntegratorConfig& c, int n_phases) {
  Json j;
  j["dt_ns"] = c.dt;
  j["record_stride"] = c.record_stride;
  j["phases"] = n_phases;
  j["positivity_check"] = c.positivity_check;
  j["positivity_tolerance"] = c.positivity_tolerance;
  j["rwa_cutoff_ghz"] = c.rwa_cutoff_ghz;
  return j;
}

Json to_json(const MeasurementModel& m) {
  return Json{{"fidelity", m.fidelity}, {"background", m.background}, {"trials", m.trials}};
}

Json to_json(const AxisSpec& a) {
  return Json{{"param", axis_name(a.id)}, {"start", a.start}, {"stop", a.stop}, {"n_points", a.n_points}};
}

Json to_json(const RunConfig& c) {
  Json j;
  j["device"] = to_json(c.context.device);
  j["drive"] = to_json(c.context.drive);
  j["decoherence"] = to_json(c.context.decoherence);
  j["integrator"] = to_json(c.context.integrator, c.context.n_phases);
  if (c.sweep) {
    Json s;
    s["axis1"] = to_json(c.sweep->axis1);
    s["axis2"] = c.sweep->axis2 ? to_json(*c.sweep->axis2) : Json(nullptr);
    s["shot_noise"] = c.sweep->shot_noise;
    j["sweep"] = s;
  }
  if (c.measurement) j["measurement"] = to_json(*c.measurement);
  j["seed"] = c.seed;
  return j;
}

RunConfig config_from_json(const Json& doc) {
  Reader r(doc, "");
  RunConfig c;
  if (const Json* v = r.find("device")) c.context.device = read_device(*v);
  if (const Json* v = r.find("drive")) c.context.drive = read_drive(*v);
  if (const Json* v = r.find("decoherence")) c.context.decoherence = read_decoherence(*v);
  if (const Json* v = r.find("integrator")) read_integrator(*v, c.context);
  if (const Json* v = r.find("sweep"); v && !v->is_null()) c.sweep = read_sweep(*v);
  if (const Json* v = r.find("measurement"); v && !v->is_null()) c.measurement = read_measurement(*v);
  if (const Json* v = r.find("seed")) {
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<long long>() >= 0)) {
      throw ConfigError("seed must be a nonnegative integer");
    }
    c.seed = v->get<std::uint64_t>();
  }
  r.finish();
  c.validate();
  return c;
}

void RunConfig::validate() const {
  try {
    context.device.validate();
    context.drive.validate();
    context.decoherence.validate();
    context.integrator.validate();
    if (context.n_phases < 1) throw ParameterError("integrator.phases must be >= 1");
    if (measurement) measurement->validate();
    if (sweep) {
      SweepSpec spec = make_sweep_spec(*this, 1);
      spec.validate();
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

SweepSpec make_sweep_spec(const RunConfig& cfg, int jobs) {
  if (!cfg.sweep) throw ConfigError("config has no sweep section");
  SweepSpec spec;
  spec.axis1 = cfg.sweep->axis1;
  spec.axis2 = cfg.sweep->axis2;
  spec.context = cfg.context;
  spec.measurement = cfg.measurement;
  spec.shot_noise = cfg.sweep->shot_noise;
  spec.rng_seed = cfg.seed;
  spec.jobs = jobs;
  return spec;
}

void apply_override(Json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "' must look like key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);

  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  Json* node = &doc;
  std::size_t start = 0;
  for (;;) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    if (node->is_null()) *node = Json::object();
    if (!node->is_object()) throw ConfigError("override path '" + path + "' descends into a non-object");
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

Json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    int line = 1, col = 1;
    for (std::size_t i = 0; i < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    std::ostringstream msg;
    msg << source << ":" << line << ":" << col << ": invalid JSON";
    throw ConfigError(msg.str());
  }
}

RunConfig build_config(Json doc, const std::vector<std::string>& overrides, const std::string& source,
                       const std::string& text) {
  if (doc.is_object() && doc.contains("schema_version") && doc.contains("config")) doc = doc["config"];
  for (const auto& o : overrides) apply_override(doc, o);
  try {
    return config_from_json(doc);
  } catch (const ConfigError& e) {
    std::string what = e.what();
    const std::string prefix = "unknown key ";
    int line = 0;
    if (what.rfind(prefix, 0) == 0 && !text.empty()) line = line_of_key(text, what.substr(prefix.size()));
    if (line > 0) throw ConfigError(source + ":" + std::to_string(line) + ": " + what);
    throw ConfigError(source + ": " + what);
  }
}

RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  return build_config(parse_json_text(text, path), overrides, path, text);
}

}  // namespace cpt
