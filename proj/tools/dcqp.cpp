#include <algorithm>
#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "dcqp/driver.hpp"
#include "dcqp/error.hpp"
#include "dcqp/report.hpp"

namespace fs = std::filesystem;
using namespace dcqp;

namespace {

enum Exit { exit_ok = 0, exit_parse = 2, exit_solver = 3 };

struct RunConfig {
  double eps = 1e-4;
  double eta = 9e-5;
  double conic_tol = 1e-7;
  double time_limit = 3600.0;
  int max_cuts = 200;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string out = ".";
  bool timing = true;
  std::string format = "canonical";

  DcqpOptions options() const {
    DcqpOptions o;
    o.eps = eps;
    o.eta = eta;
    o.conic_tol = conic_tol;
    o.time_limit_seconds = time_limit;
    o.max_cuts = max_cuts;
    return o;
  }
  InstanceFormat instance_format() const {
    return format == "dense" ? InstanceFormat::dense_text : InstanceFormat::canonical;
  }
};

void add_run_flags(CLI::App* cmd, RunConfig& cfg) {
  cmd->add_option("--eps", cfg.eps, "Relative gap tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--eta", cfg.eta, "Reference-value offset, 0 < eta <= eps")->check(CLI::PositiveNumber);
  cmd->add_option("--conic-tol", cfg.conic_tol, "Conic solver tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--time-limit", cfg.time_limit, "Wall-clock limit per instance in seconds")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-cuts", cfg.max_cuts, "Maximum number of cuts")->check(CLI::NonNegativeNumber);
  cmd->add_option("--seed", cfg.seed, "Seed (unused by the deterministic solver, recorded for runs)");
  cmd->add_option("--threads", cfg.threads, "Instances solved in parallel; DCQP_THREADS overrides")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--out", cfg.out, "Output directory");
  cmd->add_flag("!--no-timing", cfg.timing, "Leave time columns empty for reproducible CSVs");
  cmd->add_option("--format", cfg.format, "Instance format")->check(CLI::IsMember({"canonical", "dense"}));
}

int thread_count(const RunConfig& cfg) {
  if (const char* env = std::getenv("DCQP_THREADS")) {
    try {
      const int t = std::stoi(env);
      if (t > 0) return t;
    } catch (const std::exception&) {
    }
    std::cerr << "warning: ignoring DCQP_THREADS=" << env << '\n';
  }
  return cfg.threads;
}

std::string stem_name(const QpInstance& inst, const fs::path& path) {
  return inst.name.empty() ? path.stem().string() : inst.name;
}

struct Outcome {
  ResultRow row;
  std::vector<TraceRecord> trace;
  int code = exit_ok;
};

Outcome run_one(const fs::path& path, const RunConfig& cfg) {
  Outcome o;
  QpInstance inst;
  try {
    inst = load_instance(path, cfg.instance_format());
  } catch (const std::exception& e) {
    std::cerr << path.string() << ": " << e.what() << '\n';
    o.row = error_row(path.stem().string(), "parse_error");
    o.code = exit_parse;
    return o;
  }
  const std::string name = stem_name(inst, path);
  try {
    const ReducedInstance red = reduce(inst);
    const SolverReport rep = dcqp::dcqp(red, cfg.options());
    for (const std::string& w : rep.warnings) std::cerr << name << ": warning: " << w << '\n';
    o.row = make_row(name, inst.n(), inst.m(), rep);
    o.trace = rep.trace;
    o.code = rep.status == SolveStatus::solved ? exit_ok : exit_solver;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << '\n';
    o.row = error_row(name, "error");
    o.row.n = inst.n();
    o.row.m = inst.m();
    o.code = exit_solver;
  }
  return o;
}

int cmd_solve(const std::string& file, const RunConfig& cfg) {
  if (!(cfg.eta <= cfg.eps)) {
    std::cerr << "error: need eta <= eps\n";
    return exit_parse;
  }
  const Outcome o = run_one(file, cfg);
  if (o.code == exit_parse) return o.code;
  fs::create_directories(cfg.out);
  const fs::path out(cfg.out);
  write_file_atomic(out / (o.row.name + ".results.csv"), results_csv({o.row}, cfg.timing));
  write_file_atomic(out / (o.row.name + ".trace.csv"), trace_csv(o.trace, cfg.timing));
  std::cout << o.row.name << ": " << o.row.status << "  upper " << format_number(o.row.upper_bound) << "  lower "
            << format_number(o.row.lower_bound) << "  gap " << format_number(o.row.final_gap) << "  cuts "
            << o.row.num_cuts << '\n';
  return o.code;
}

int cmd_bench(const std::string& dir, const RunConfig& cfg) {
  if (!(cfg.eta <= cfg.eps)) {
    std::cerr << "error: need eta <= eps\n";
    return exit_parse;
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".qpinst") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) std::cerr << "warning: no .qpinst files in " << dir << '\n';

  std::vector<Outcome> outcomes(files.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < files.size();) {
      outcomes[i] = run_one(files[i], cfg);
      const std::lock_guard lock(log_mutex);
      std::cerr << outcomes[i].row.name << ": " << outcomes[i].row.status << '\n';
    }
  };
  const int nt = std::max(1, std::min<int>(thread_count(cfg), static_cast<int>(files.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < nt; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::sort(outcomes.begin(), outcomes.end(),
            [](const Outcome& a, const Outcome& b) { return a.row.name < b.row.name; });
  const fs::path out(cfg.out);
  fs::create_directories(out / "traces");
  std::vector<ResultRow> rows;
  for (const Outcome& o : outcomes) {
    rows.push_back(o.row);
    write_file_atomic(out / "traces" / (o.row.name + ".trace.csv"), trace_csv(o.trace, cfg.timing));
  }
  write_file_atomic(out / "summary.csv", results_csv(rows, cfg.timing));
  write_file_atomic(out / "curve.csv", curve_csv(rows));
  return exit_ok;
}

int cmd_gen(SyntheticSpec spec, double level, int count, const std::string& dist, const RunConfig& cfg) {
  spec.distribution = dist == "n" ? Distribution::normal : Distribution::uniform;
  spec.density = level / 10.0;
  const std::uint64_t base = cfg.seed;
  fs::create_directories(cfg.out);
  for (int i = 1; i <= count; ++i) {
    spec.seed = base + static_cast<std::uint64_t>(i);
    QpInstance inst = generate_synthetic(spec);
    inst.name = synthetic_name(spec, i);
    save_instance(fs::path(cfg.out) / (inst.name + ".qpinst"), inst);
  }
  return exit_ok;
}

int cmd_convert(const std::string& in, const std::string& out, const RunConfig& cfg) {
  QpInstance inst;
  try {
    inst = load_instance(in, cfg.instance_format());
  } catch (const std::exception& e) {
    std::cerr << in << ": " << e.what() << '\n';
    return exit_parse;
  }
  if (inst.name.empty()) inst.name = fs::path(in).stem().string();
  save_instance(out, inst);
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Global solver for nonconvex quadratic programs over polytopes"};
  app.require_subcommand(1);

  RunConfig solve_cfg, bench_cfg, gen_cfg, convert_cfg;
  std::string solve_file, bench_dir, convert_in, convert_out;

  auto* solve = app.add_subcommand("solve", "Solve one instance");
  solve->add_option("instance", solve_file, "Instance file")->required();
  add_run_flags(solve, solve_cfg);

  auto* bench = app.add_subcommand("bench", "Solve every .qpinst file in a directory");
  bench->add_option("directory", bench_dir, "Instance directory")->required()->check(CLI::ExistingDirectory);
  add_run_flags(bench, bench_cfg);

  SyntheticSpec spec;
  double level = 1.0;
  int count = 1;
  std::string dist = "u";
  auto* gen = app.add_subcommand("gen", "Generate synthetic instances");
  gen->add_option("--n", spec.n, "Number of variables")->check(CLI::PositiveNumber);
  gen->add_option("--m", spec.m_ineq, "Random inequality rows")->check(CLI::NonNegativeNumber);
  gen->add_option("--meq", spec.m_eq, "Equality rows")->check(CLI::NonNegativeNumber);
  gen->add_option("--dist", dist, "Entry distribution: u (uniform) or n (normal)")->check(CLI::IsMember({"u", "n"}));
  gen->add_option("--density", level, "Density level, ten times the fraction of nonzeros")
      ->check(CLI::Range(0.0, 10.0));
  gen->add_option("--count", count, "Number of instances")->check(CLI::NonNegativeNumber);
  gen->add_option("--seed", gen_cfg.seed, "Base seed; instance i uses seed + i");
  gen->add_option("--out", gen_cfg.out, "Output directory");

  auto* convert = app.add_subcommand("convert", "Rewrite an instance in canonical form");
  convert->add_option("input", convert_in, "Input file")->required()->check(CLI::ExistingFile);
  convert->add_option("output", convert_out, "Output file")->required();
  convert->add_option("--format", convert_cfg.format, "Input format")->check(CLI::IsMember({"canonical", "dense"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? exit_ok : exit_parse;
  }

  try {
    if (*solve) return cmd_solve(solve_file, solve_cfg);
    if (*bench) return cmd_bench(bench_dir, bench_cfg);
    if (*gen) return cmd_gen(spec, level, count, dist, gen_cfg);
    if (*convert) return cmd_convert(convert_in, convert_out, convert_cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_solver;
  }
  return exit_ok;
}
