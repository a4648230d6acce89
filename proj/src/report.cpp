#include "dcqp/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "dcqp/error.hpp"

namespace dcqp {

ResultRow make_row(const std::string& name, Eigen::Index n, Eigen::Index m, const SolverReport& rep) {
  ResultRow r;
  r.name = name;
  r.n = n;
  r.m = m;
  r.initial_gap = rep.initial_gap;
  r.num_cuts = rep.num_cuts;
  r.final_gap = rep.final_gap;
  r.lower_bound = rep.lower_bound;
  r.upper_bound = rep.upper_bound;
  r.time_seconds = rep.time_seconds;
  r.status = to_string(rep.status);
  return r;
}

ResultRow error_row(const std::string& name, const std::string& status) {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  ResultRow r;
  r.name = name;
  r.initial_gap = r.final_gap = r.lower_bound = r.upper_bound = nan;
  r.status = status;
  return r;
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

namespace {

std::string format_time(double t) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  return buf;
}

}  // namespace

std::string results_csv(const std::vector<ResultRow>& rows, bool timing) {
  std::string out = "name,n,m,initial_gap,num_cuts,final_gap,lower_bound,upper_bound,time_seconds,status\n";
  for (const ResultRow& r : rows) {
    out += r.name + ',' + std::to_string(r.n) + ',' + std::to_string(r.m) + ',' + format_number(r.initial_gap) + ',' +
           std::to_string(r.num_cuts) + ',' + format_number(r.final_gap) + ',' + format_number(r.lower_bound) + ',' +
           format_number(r.upper_bound) + ',' + (timing ? format_time(r.time_seconds) : "") + ',' + r.status + '\n';
  }
  return out;
}

std::string trace_csv(const std::vector<TraceRecord>& trace, bool timing) {
  std::string out = "iter,upper,region_bound,removed_bound,gap,cut_time,bound_time,search_time\n";
  for (const TraceRecord& t : trace) {
    out += std::to_string(t.iter) + ',' + format_number(t.upper) + ',' + format_number(t.region_bound) + ',' +
           format_number(t.removed_bound) + ',' + format_number(t.gap);
    for (double s : {t.cut_time, t.bound_time, t.search_time}) out += ',' + (timing ? format_time(s) : std::string());
    out += '\n';
  }
  return out;
}

std::string curve_csv(const std::vector<ResultRow>& rows) {
  std::vector<const ResultRow*> order;
  for (const ResultRow& r : rows) order.push_back(&r);
  std::stable_sort(order.begin(), order.end(),
                   [](const ResultRow* a, const ResultRow* b) { return a->time_seconds < b->time_seconds; });
  std::string out = "time_seconds,fraction_solved\n";
  std::size_t solved = 0;
  for (const ResultRow* r : order) {
    if (r->status == "solved") ++solved;
    out += format_time(r->time_seconds) + ',' +
           format_number(static_cast<double>(solved) / static_cast<double>(rows.size())) + '\n';
  }
  return out;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << content;
    if (!out) throw Error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dcqp
