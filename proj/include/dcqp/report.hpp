#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "dcqp/driver.hpp"

namespace dcqp {

struct ResultRow {
  std::string name;
  Eigen::Index n = 0;
  Eigen::Index m = 0;
  double initial_gap = 0.0;
  int num_cuts = 0;
  double final_gap = 0.0;
  double lower_bound = 0.0;
  double upper_bound = 0.0;
  double time_seconds = 0.0;
  std::string status;
};

ResultRow make_row(const std::string& name, Eigen::Index n, Eigen::Index m, const SolverReport& rep);

// Row for an instance that could not be solved at all (parse or setup error).
ResultRow error_row(const std::string& name, const std::string& status);

std::string format_number(double v);

// With timing off, time columns are left empty so repeated runs compare equal.
std::string results_csv(const std::vector<ResultRow>& rows, bool timing = true);
std::string trace_csv(const std::vector<TraceRecord>& trace, bool timing = true);

// (time_seconds, fraction_solved) after each completion, in order of solve time.
std::string curve_csv(const std::vector<ResultRow>& rows);

// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace dcqp
