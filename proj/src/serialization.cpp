#include "cpt/serialization.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace cpt {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

Json output_metadata(const std::string& kind, const RunConfig& cfg) {
  Json m;
  m["schema_version"] = kSchemaVersion;
  m["tool_version"] = CPT_VERSION;
  m["kind"] = kind;
  m["seed"] = cfg.seed;
  m["config"] = to_json(cfg);
  return m;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  throw ConfigError("missing column '" + name + "'");
}

void write_csv(std::ostream& os, const CsvTable& table) {
  for (auto it = table.metadata.begin(); it != table.metadata.end(); ++it) {
    os << "# " << it.key() << ": " << (it->is_string() ? it->get<std::string>() : it->dump()) << "\n";
  }
  for (std::size_t i = 0; i < table.columns.size(); ++i) os << (i ? "," : "") << table.columns[i];
  os << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << format_double(row[i]);
    os << "\n";
  }
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_cell(const std::string& cell, const std::string& where) {
  if (cell == "inf") return kInfiniteTime;
  if (cell == "-inf") return -kInfiniteTime;
  if (cell == "nan") return std::nan("");
  double v = 0.0;
  const char* end = cell.data() + cell.size();
  const auto res = std::from_chars(cell.data(), end, v);
  if (res.ec != std::errc() || res.ptr != end) throw ConfigError(where + ": '" + cell + "' is not a number");
  return v;
}

}  // namespace

CsvTable read_csv(std::istream& is, const std::string& source) {
  CsvTable t;
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++line_no;
    const std::string s = trim(line);
    if (s.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    if (s[0] == '#') {
      const std::string body = trim(s.substr(1));
      const auto colon = body.find(':');
      if (colon == std::string::npos) continue;
      const std::string key = trim(body.substr(0, colon));
      const std::string value = trim(body.substr(colon + 1));
      Json parsed = Json::parse(value, nullptr, false);
      t.metadata[key] = parsed.is_discarded() ? Json(value) : parsed;
      continue;
    }
    const auto cells = split(s);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    if (cells.size() != t.columns.size()) {
      throw ConfigError(where + ": expected " + std::to_string(t.columns.size()) + " fields, found " +
                        std::to_string(cells.size()));
    }
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) row.push_back(parse_cell(c, where));
    t.rows.push_back(std::move(row));
  }
  if (!header) throw ConfigError(source + ": no header row");
  return t;
}

CsvTable sweep_table(const SweepResult& r, const Json& metadata) {
  CsvTable t;
  t.metadata = metadata;
  t.metadata["stats"] = to_json(r.metadata.stats);
  t.columns.push_back(axis_name(r.axis1.id));
  if (r.axis2) t.columns.push_back(axis_name(r.axis2->id));
  t.columns.insert(t.columns.end(), {"p2", "p1", "p3"});
  for (Eigen::Index i = 0; i < r.p2.rows(); ++i) {
    for (Eigen::Index j = 0; j < r.p2.cols(); ++j) {
      std::vector<double> row{r.axis1_values[static_cast<std::size_t>(i)]};
      if (r.axis2) row.push_back(r.axis2_values[static_cast<std::size_t>(j)]);
      row.insert(row.end(), {r.p2(i, j), r.p1(i, j), r.p3(i, j)});
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

namespace {

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

Json sweep_json(const SweepResult& r, const Json& metadata) {
  Json j = metadata;
  j["axis1"] = to_json(r.axis1);
  j["axis1"]["values"] = r.axis1_values;
  if (r.axis2) {
    j["axis2"] = to_json(*r.axis2);
    j["axis2"]["values"] = r.axis2_values;
  } else {
    j["axis2"] = nullptr;
  }
  j["p2"] = matrix_json(r.p2);
  j["p1"] = matrix_json(r.p1);
  j["p3"] = matrix_json(r.p3);
  j["stats"] = to_json(r.metadata.stats);
  return j;
}

CsvTable trajectory_table(const Trajectory& traj, const Json& metadata) {
  CsvTable t;
  t.metadata = metadata;
  t.metadata["stats"] = to_json(traj.stats);
  t.columns = {"t_ns", "p0", "p1", "p2", "p3"};
  for (std::size_t i = 0; i < traj.size(); ++i) {
    const auto p = traj.populations(i);
    t.rows.push_back({traj.times[i], p[0], p[1], p[2], p[3]});
  }
  return t;
}

CsvTable series_table(const Series& s, const std::string& y_name, const Json& metadata) {
  CsvTable t;
  t.metadata = metadata;
  if (s.fixed_axis) {
    t.metadata["fixed_axis"] = axis_name(*s.fixed_axis);
    t.metadata["fixed_value"] = s.fixed_value;
  }
  t.columns = {axis_name(s.axis), y_name};
  for (std::size_t i = 0; i < s.x.size(); ++i) t.rows.push_back({s.x[i], s.y[i]});
  return t;
}

Json to_json(const FitReport& r) {
  Json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = CPT_VERSION;
  j["kind"] = "fit_report";
  Json params = Json::array();
  for (const auto& p : r.parameters) {
    params.push_back({{"name", p.name}, {"unit", p.unit}, {"value", p.value},
                      {"uncertainty", std::isfinite(p.uncertainty) ? Json(p.uncertainty) : Json("inf")},
                      {"readout_resolution",
                       std::isfinite(p.readout_resolution) ? Json(p.readout_resolution) : Json("inf")}});
  }
  j["parameters"] = params;
  j["rss"] = r.rss;
  j["iterations"] = r.iterations;
  j["evaluations"] = r.evaluations;
  j["converged"] = r.converged;
  j["flat_residual"] = r.flat_residual;
  j["rejected_candidates"] = r.rejected_candidates;
  j["rejections"] = r.rejections;
  return j;
}

Json to_json(const ContrastResult& r) {
  return Json{{"contrast", r.contrast},
              {"uncertainty", r.uncertainty},
              {"on_vertex", {{"x", r.on.x}, {"p2", r.on.y}, {"sigma", r.on.y_sigma}}},
              {"off_vertex", {{"x", r.off.x}, {"p2", r.off.y}, {"sigma", r.off.y_sigma}}}};
}

Json to_json(const LorentzianFit& f) {
  return Json{{"fwhm_mhz", f.fwhm_mhz()}, {"center_ghz", f.center}, {"amplitude", f.amplitude},
              {"offset", f.offset}, {"slope", f.slope}, {"rss", f.rss}, {"iterations", f.iterations}};
}

Json to_json(const IntegrationStats& s) {
  return Json{{"renormalizations", s.renormalizations}, {"positivity_warnings", s.positivity_warnings}};
}

void write_file(const std::string& path, const std::string& text) {
  const std::filesystem::path p(path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path);
}

std::string csv_text(const CsvTable& table) {
  std::ostringstream os;
  write_csv(os, table);
  return os.str();
}

std::string json_text(const Json& doc) { return doc.dump(2) + "\n"; }

}  // namespace cpt
