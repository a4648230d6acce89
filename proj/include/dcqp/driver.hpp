#pragma once

#include <limits>
#include <string>
#include <vector>

#include "dcqp/cut.hpp"

namespace dcqp {

struct DcqpOptions {
  double eps = 1e-4;
  double eta = 9e-5;
  double conic_tol = 1e-7;
  int conic_max_iters = 200000;
  double time_limit_seconds = 3600.0;
  int max_cuts = 200;
  Tolerances tol;
};

enum class SolveStatus { solved, time_limit, cut_failed, max_cuts };

const char* to_string(SolveStatus s);

struct TraceRecord {
  int iter = 0;
  double upper = 0.0;
  double region_bound = 0.0;
  double removed_bound = 0.0;
  double gap = 0.0;
  double cut_time = 0.0;
  double bound_time = 0.0;
  double search_time = 0.0;

  double lower() const { return std::min(region_bound, removed_bound); }
};

struct SolverReport {
  double upper_bound = std::numeric_limits<double>::infinity();
  double lower_bound = -std::numeric_limits<double>::infinity();
  double region_bound = -std::numeric_limits<double>::infinity();
  double removed_bound = std::numeric_limits<double>::infinity();
  double initial_gap = std::numeric_limits<double>::infinity();
  double final_gap = std::numeric_limits<double>::infinity();
  int num_cuts = 0;
  SolveStatus status = SolveStatus::cut_failed;
  Vec best_x;
  std::vector<Cut> cuts;
  ReducedInstance region;  // input rows followed by one row per cut, in order
  std::vector<TraceRecord> trace;
  std::vector<std::string> warnings;
  double time_seconds = 0.0;
};

// (upper - lower) / max(|upper|, eps), clamped at 0.
double relative_gap(double upper, double lower, double eps);

SolverReport dcqp(const ReducedInstance& inst, const DcqpOptions& opts = {});

}  // namespace dcqp
