#pragma once

// CSV and JSON output. CSV files carry '#'-prefixed metadata lines
// ("# key: value") ahead of a header row; numbers use the shortest
// round-trip decimal form independent of locale.

#include <iosfwd>
#include <string>
#include <vector>

#include "cpt/analysis.hpp"
#include "cpt/config.hpp"
#include "cpt/sweep.hpp"

namespace cpt {

inline constexpr int kSchemaVersion = 1;

/// Shortest decimal that parses back to the same double; "inf", "-inf", "nan".
std::string format_double(double v);

/// Metadata common to every output: schema and tool version, kind, seed, config.
Json output_metadata(const std::string& kind, const RunConfig& cfg);

struct CsvTable {
  Json metadata = Json::object();  // from "# key: value" lines; values parsed as JSON when possible
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  /// Index of a named column; throws ConfigError when absent.
  std::size_t column(const std::string& name) const;
};

void write_csv(std::ostream& os, const CsvTable& table);
/// Throws ConfigError on malformed input.
CsvTable read_csv(std::istream& is, const std::string& source);

CsvTable sweep_table(const SweepResult& r, const Json& metadata);
Json sweep_json(const SweepResult& r, const Json& metadata);

CsvTable trajectory_table(const Trajectory& t, const Json& metadata);
CsvTable series_table(const Series& s, const std::string& y_name, const Json& metadata);

Json to_json(const FitReport& r);
Json to_json(const ContrastResult& r);
Json to_json(const LorentzianFit& f);
Json to_json(const IntegrationStats& s);

/// Writes text to a file, creating parent directories; throws std::runtime_error.
void write_file(const std::string& path, const std::string& text);
std::string csv_text(const CsvTable& table);
std::string json_text(const Json& doc);

}  // namespace cpt
