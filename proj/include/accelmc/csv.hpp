#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace accelmc {

// Fixed output schema shared by every experiment table. wall_time_ms is
// always written as 0 in data rows: bodies must be a pure function of
// (config, seed), and measured timings live in the manifest comment instead.
struct CsvRow {
  std::string experiment;
  std::string label;
  std::int64_t n_or_level = 0;
  double value = 0.0;
  double std_error = 0.0;
  std::int64_t samples = 0;
  std::uint64_t seed = 0;
};

struct CsvTable {
  std::string name;  // file stem, e.g. "strong_error_terminal"
  std::vector<CsvRow> rows;
};

// Canonical body: header line plus rows sorted by (label, n_or_level).
// Doubles are rendered with %.17g so values round-trip exactly.
std::string render_csv_body(const CsvTable& table);

// Body preceded by '#' manifest lines (hash, seed, version, timing, notes).
std::string render_csv(const CsvTable& table,
                       const std::vector<std::string>& manifest_lines);

// FNV-1a 64-bit over a canonical string, hex-encoded; used for config hashes.
std::string fnv1a_hex(const std::string& text);

}  // namespace accelmc
