#include "accelmc/csv.hpp"

#include <algorithm>
#include <cstdio>

namespace accelmc {

namespace {

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

std::string render_csv_body(const CsvTable& table) {
  std::vector<const CsvRow*> ordered;
  ordered.reserve(table.rows.size());
  for (const CsvRow& row : table.rows) ordered.push_back(&row);
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const CsvRow* a, const CsvRow* b) {
                     if (a->label != b->label) return a->label < b->label;
                     return a->n_or_level < b->n_or_level;
                   });

  std::string out =
      "experiment,label,n_or_level,value,std_error,samples,seed,wall_time_ms\n";
  for (const CsvRow* row : ordered) {
    out += row->experiment;
    out += ',';
    out += row->label;
    out += ',';
    out += std::to_string(row->n_or_level);
    out += ',';
    out += format_double(row->value);
    out += ',';
    out += format_double(row->std_error);
    out += ',';
    out += std::to_string(row->samples);
    out += ',';
    out += std::to_string(row->seed);
    out += ",0\n";
  }
  return out;
}

std::string render_csv(const CsvTable& table,
                       const std::vector<std::string>& manifest_lines) {
  std::string out;
  for (const std::string& line : manifest_lines) {
    out += "# ";
    out += line;
    out += '\n';
  }
  out += render_csv_body(table);
  return out;
}

std::string fnv1a_hex(const std::string& text) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(hash));
  return buf;
}

}  // namespace accelmc
