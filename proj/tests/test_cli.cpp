#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "dcqp/report.hpp"
#include "fixtures.hpp"

using namespace dcqp;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& tag) {
  const fs::path dir = fs::temp_directory_path() / ("dcqp_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(DCQP_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  for (std::string f; std::getline(ss, f, ',');) out.push_back(f);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string l; std::getline(ss, l);) out.push_back(l);
  return out;
}

std::vector<ResultRow> sample_rows() {
  ResultRow a{"alpha", 2, 3, 0.5, 1, 1e-5, -0.25000001, -0.25, 1.234, "solved"};
  return {a, error_row("beta", "parse_error")};
}

}  // namespace

TEST_SUITE("report") {
  TEST_CASE("golden CSV layouts") {
    const fs::path golden(DCQP_GOLDEN_DIR);
    CHECK(results_csv(sample_rows()) == slurp(golden / "results.csv"));
    CHECK(results_csv(sample_rows(), false) == slurp(golden / "results_untimed.csv"));
    CHECK(curve_csv(sample_rows()) == slurp(golden / "curve.csv"));
    std::vector<TraceRecord> trace{{0, -0.25, -0.3, std::numeric_limits<double>::infinity(), 0.2, 0.0, 0.5, 0.25},
                                   {1, -0.25, -0.2500001, -0.2500225, 4e-7, 1.5, 0.125, 0.0}};
    CHECK(trace_csv(trace) == slurp(golden / "trace.csv"));
  }

  TEST_CASE("number formatting") {
    CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(format_number(-std::numeric_limits<double>::infinity()) == "-inf");
    CHECK(format_number(std::nan("")) == "nan");
    CHECK(format_number(0.1) == "0.1");
  }

  TEST_CASE("atomic writes leave no temporary behind") {
    const fs::path dir = scratch("atomic");
    write_file_atomic(dir / "x.csv", "a\n");
    write_file_atomic(dir / "x.csv", "b\n");
    CHECK(slurp(dir / "x.csv") == "b\n");
    CHECK_FALSE(fs::exists(dir / "x.csv.tmp"));
  }
}

TEST_SUITE("cli") {
  TEST_CASE("solve writes a results row and a trace") {
    const fs::path dir = scratch("solve");
    save_instance(dir / "remark.qpinst", fixtures::remark_qp());
    CHECK(run("solve " + (dir / "remark.qpinst").string() + " --out " + (dir / "out").string()) == 0);
    const auto rows = lines(slurp(dir / "out" / "remark.results.csv"));
    REQUIRE(rows.size() == 2);
    const auto f = csv_fields(rows[1]);
    REQUIRE(f.size() == 10);
    CHECK(f[0] == "remark");
    CHECK(std::stod(f[5]) <= 1e-4);
    CHECK(f[9] == "solved");
    CHECK(lines(slurp(dir / "out" / "remark.trace.csv")).size() >= 2);
  }

  TEST_CASE("exit codes") {
    const fs::path dir = scratch("codes");
    {
      std::ofstream bad(dir / "bad.qpinst");
      bad << "qpinst 1\n2 1 0 0\nA\n1 1 oops\n";
    }
    CHECK(run("solve " + (dir / "bad.qpinst").string() + " --out " + dir.string()) == 2);

    save_instance(dir / "horn.qpinst", fixtures::horn_qp());
    const std::string horn = (dir / "horn.qpinst").string();
    CHECK(run("solve " + horn + " --time-limit 0 --out " + dir.string()) == 3);
    const auto f = csv_fields(lines(slurp(dir / "horn.results.csv"))[1]);
    CHECK(f[9] == "time_limit");
    CHECK(std::stod(f[3]) > 1e-4);

    CHECK(run("solve " + horn + " --eps 1e-4 --eta 2e-4 --out " + dir.string()) == 2);
    CHECK(run("solve " + horn + " --no-such-flag") == 2);
  }

  TEST_CASE("bench curves and empty directories") {
    const fs::path empty = scratch("bench_empty");
    CHECK(run("bench " + empty.string() + " --out " + (empty / "out").string()) == 0);
    CHECK(lines(slurp(empty / "out" / "summary.csv")).size() == 1);

    const fs::path dir = scratch("bench");
    save_instance(dir / "convex_box.qpinst", fixtures::convex_box(2));
    save_instance(dir / "remark.qpinst", fixtures::remark_qp());
    CHECK(run("bench " + dir.string() + " --out " + (dir / "out").string() + " --no-timing") == 0);
    const auto summary = lines(slurp(dir / "out" / "summary.csv"));
    REQUIRE(summary.size() == 3);
    CHECK(summary[0] == "name,n,m,initial_gap,num_cuts,final_gap,lower_bound,upper_bound,time_seconds,status");
    CHECK(csv_fields(summary[1])[0] == "convex_box");
    CHECK(csv_fields(summary[1])[8].empty());
    CHECK(csv_fields(summary[2])[0] == "remark");
    const auto curve = lines(slurp(dir / "out" / "curve.csv"));
    CHECK(csv_fields(curve.back())[1] == "1");
    CHECK(fs::exists(dir / "out" / "traces" / "remark.trace.csv"));

    // convex_box closes at the root, the Horn instance cannot within zero seconds
    const fs::path half = scratch("bench_half");
    save_instance(half / "a.qpinst", fixtures::convex_box(2));
    save_instance(half / "b.qpinst", fixtures::horn_qp());
    CHECK(run("bench " + half.string() + " --time-limit 0 --out " + (half / "out").string()) == 0);
    CHECK(csv_fields(lines(slurp(half / "out" / "curve.csv")).back())[1] == "0.5");
  }

  TEST_CASE("gen is deterministic and names files by group") {
    const fs::path a = scratch("gen_a");
    const fs::path b = scratch("gen_b");
    const std::string flags = " --dist u --meq 0 --density 1 --n 30 --m 20 --count 3 --seed 5";
    CHECK(run("gen" + flags + " --out " + a.string()) == 0);
    CHECK(run("gen" + flags + " --out " + b.string()) == 0);
    for (int i = 1; i <= 3; ++i) {
      const std::string name = "qp_u_0_1_" + std::to_string(i) + ".qpinst";
      REQUIRE(fs::exists(a / name));
      CHECK(slurp(a / name) == slurp(b / name));
    }
    const fs::path none = scratch("gen_none");
    CHECK(run("gen --count 0 --out " + none.string()) == 0);
    CHECK(fs::is_empty(none));
  }

  TEST_CASE("convert rewrites dense text in canonical form") {
    const fs::path dir = scratch("convert");
    {
      std::ofstream out(dir / "tiny.txt");
      out << "2 1 0\n-2 0 0 -2\n0 0\n1 1\n1\n0 0\n1 1\n";
    }
    CHECK(run("convert " + (dir / "tiny.txt").string() + " " + (dir / "tiny.qpinst").string() + " --format dense") ==
          0);
    const auto q = load_instance(dir / "tiny.qpinst");
    CHECK(q.Q == -Mat::Identity(2, 2));
    CHECK(q.m() == 1);
  }
}
