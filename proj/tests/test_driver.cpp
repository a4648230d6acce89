#include <doctest.h>

#include <cmath>
#include <limits>

#include "dcqp/driver.hpp"
#include "dcqp/oracle.hpp"
#include "fixtures.hpp"

using namespace dcqp;

namespace {

constexpr double inf = std::numeric_limits<double>::infinity();

void check_trace_shape(const SolverReport& rep) {
  REQUIRE(!rep.trace.empty());
  for (std::size_t k = 1; k < rep.trace.size(); ++k) {
    CHECK(rep.trace[k].upper <= rep.trace[k - 1].upper);
    CHECK(rep.trace[k].removed_bound <= rep.trace[k - 1].removed_bound);
    CHECK(rep.trace[k].iter == rep.trace[k - 1].iter + 1);
  }
  CHECK(rep.lower_bound == std::min(rep.region_bound, rep.removed_bound));
  CHECK(rep.num_cuts == static_cast<int>(rep.cuts.size()));
  for (const auto& cut : rep.cuts) CHECK(std::abs(cut.row().dot(cut.anchor) - cut.rhs() - 1.0) <= 1e-12);
}

}  // namespace

TEST_SUITE("driver") {
  TEST_CASE("relative gap") {
    CHECK(relative_gap(1.0, 0.9999, 1e-4) == doctest::Approx(1e-4));
    CHECK(relative_gap(0.0, -1e-5, 1e-4) == doctest::Approx(0.1));
    CHECK(relative_gap(-0.25, -0.250025, 1e-4) == doctest::Approx(1e-4));
    CHECK(relative_gap(1.0, 1.5, 1e-4) == 0.0);
    CHECK(relative_gap(inf, 0.0, 1e-4) == inf);
    CHECK(relative_gap(1.0, -inf, 1e-4) == inf);
    CHECK(relative_gap(1.0, inf, 1e-4) == 0.0);
  }

  TEST_CASE("remark instance") {
    auto inst = reduce(fixtures::remark_qp());
    auto rep = dcqp::dcqp(inst);
    CHECK(rep.status == SolveStatus::solved);
    CHECK(std::abs(rep.upper_bound + 0.25) <= 1e-6);
    CHECK(rep.final_gap <= 1e-4);
    CHECK(rep.final_gap == relative_gap(rep.upper_bound, rep.lower_bound, 1e-4));
    check_trace_shape(rep);
  }

  TEST_CASE("convex and concave boxes close at the root") {
    auto convex = dcqp::dcqp(reduce(fixtures::convex_box(2)));
    CHECK(convex.status == SolveStatus::solved);
    CHECK(convex.num_cuts == 0);
    CHECK(std::abs(convex.upper_bound) <= 1e-9);

    auto concave = dcqp::dcqp(reduce(fixtures::concave_box(2)));
    CHECK(concave.status == SolveStatus::solved);
    CHECK(concave.num_cuts == 0);
    CHECK(concave.upper_bound == doctest::Approx(-2.0));
  }

  TEST_CASE("Horn instance needs cuts and stays sound") {
    const auto inst = fixtures::horn_simplex();
    const double global = global_qp_oracle(inst).value;
    auto rep = dcqp::dcqp(inst);
    CHECK(rep.status == SolveStatus::solved);
    CHECK(rep.num_cuts >= 1);
    CHECK(rep.final_gap <= 1e-4 + 5e-5);
    CHECK(rep.region.rows() == inst.rows() + rep.num_cuts);
    check_trace_shape(rep);
    for (const auto& t : rep.trace) {
      CHECK(t.lower() <= global + 1e-6);
      CHECK(t.upper >= global - 1e-6);
    }
    for (const auto& cut : rep.cuts) {
      const auto removed = inst.with_row(cut.c, cut.c.dot(cut.anchor) + 1.0, {RowKind::cut, 0});
      CHECK(global_qp_oracle(removed).value >= cut.w - 1e-6);
    }
  }

  TEST_CASE("limits") {
    const auto inst = fixtures::horn_simplex();
    DcqpOptions no_time;
    no_time.time_limit_seconds = 0.0;
    auto t = dcqp::dcqp(inst, no_time);
    CHECK(t.status == SolveStatus::time_limit);
    CHECK(t.num_cuts == 0);
    CHECK(std::isfinite(t.initial_gap));
    CHECK(t.initial_gap > 1e-4);

    DcqpOptions one_cut;
    one_cut.max_cuts = 1;
    auto c = dcqp::dcqp(inst, one_cut);
    CHECK(c.status == SolveStatus::max_cuts);
    CHECK(c.num_cuts == 1);
  }

  TEST_CASE("parameter checks") {
    const auto inst = reduce(fixtures::convex_box(1));
    DcqpOptions bad;
    bad.eta = 2e-4;
    CHECK_THROWS_AS(dcqp::dcqp(inst, bad), std::invalid_argument);
    bad.eta = 0.0;
    CHECK_THROWS_AS(dcqp::dcqp(inst, bad), std::invalid_argument);
    const auto empty = inst.with_row(Vec::Ones(1), -1.0, {RowKind::cut, 0});
    CHECK_THROWS_AS(dcqp::dcqp(empty), InfeasibleRegionError);
  }

  TEST_CASE("reruns reproduce the trace") {
    const auto inst = fixtures::horn_simplex();
    auto a = dcqp::dcqp(inst);
    auto b = dcqp::dcqp(inst);
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) {
      CHECK(a.trace[k].upper == b.trace[k].upper);
      CHECK(a.trace[k].region_bound == b.trace[k].region_bound);
      CHECK(a.trace[k].removed_bound == b.trace[k].removed_bound);
    }
    CHECK(a.best_x == b.best_x);
  }
}
