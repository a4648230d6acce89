#include "dcqp/driver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

#include "dcqp/cvxqp.hpp"

namespace dcqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kGapSlack = 5e-5;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

// Local search from `start`; one retry from a jittered start when the result is
// not certified.
KktPoint search(const ReducedInstance& region, const Vec& start, const Tolerances& tol) {
  KktPoint kkt = finite_gmc(region, start, tol);
  if (kkt.certified) return kkt;
  std::mt19937_64 rng(0x5eed);
  std::uniform_real_distribution<double> jitter(-1e-6, 1e-6);
  Vec moved = start;
  for (Eigen::Index i = 0; i < moved.size(); ++i) moved(i) += jitter(rng);
  moved = project_onto_polytope(moved, region.A, region.b);
  KktPoint again = finite_gmc(region, moved, tol);
  if (again.certified || again.objective < kkt.objective) return again;
  return kkt;
}

}  // namespace

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::solved: return "solved";
    case SolveStatus::time_limit: return "time_limit";
    case SolveStatus::cut_failed: return "cut_failed";
    case SolveStatus::max_cuts: return "max_cuts";
  }
  return "unknown";
}

double relative_gap(double upper, double lower, double eps) {
  if (std::isinf(upper) && upper > 0) return kInf;
  if (std::isinf(lower)) return lower > 0 ? 0.0 : kInf;
  return std::max(0.0, (upper - lower) / std::max(std::abs(upper), eps));
}

SolverReport dcqp(const ReducedInstance& inst, const DcqpOptions& opts) {
  if (!(opts.eta > 0.0 && opts.eta <= opts.eps)) throw std::invalid_argument("dcqp: need 0 < eta <= eps");
  const auto t0 = Clock::now();
  const double eps = opts.eps;
  auto scale = [eps](double v) { return std::max(std::abs(v), eps); };

  SolverReport rep;
  rep.region = inst;
  ReducedInstance& region = rep.region;

  ConicSettings settings;
  settings.tol = opts.conic_tol;
  settings.max_iters = opts.conic_max_iters;
  auto remaining = [&] { return std::max(opts.time_limit_seconds - seconds_since(t0), 1e-3); };

  auto tb = Clock::now();
  BoundResult bound = dnn_lower_bound(region, settings);
  TraceRecord rec;
  rec.bound_time = seconds_since(tb);
  rep.region_bound = bound.safe_bound;
  if (bound.status == BoundStatus::infeasible_region) throw InfeasibleRegionError("dcqp: empty feasible region");

  auto ts = Clock::now();
  KktPoint kkt = search(region, bound.zbar, opts.tol);
  rec.search_time = seconds_since(ts);
  rep.upper_bound = kkt.objective;
  rep.best_x = kkt.x;

  auto log = [&](TraceRecord r) {
    rep.lower_bound = std::min(rep.region_bound, rep.removed_bound);
    r.iter = static_cast<int>(rep.trace.size());
    r.upper = rep.upper_bound;
    r.region_bound = rep.region_bound;
    r.removed_bound = rep.removed_bound;
    r.gap = relative_gap(rep.upper_bound, rep.lower_bound, eps);
    if (rep.upper_bound < rep.lower_bound)
      rep.warnings.push_back("iteration " + std::to_string(r.iter) + ": lower bound exceeds upper bound by " +
                             std::to_string(rep.lower_bound - rep.upper_bound));
    rep.trace.push_back(r);
  };
  log(rec);
  rep.initial_gap = rep.trace.front().gap;

  ConicSolution cut_warm;
  bool have_cut_warm = false;
  std::optional<SolveStatus> stop;
  while (!stop) {
    const double vbar = rep.upper_bound;
    if (rep.region_bound >= vbar - eps * scale(vbar)) {
      stop = SolveStatus::solved;
      break;
    }
    if (seconds_since(t0) >= opts.time_limit_seconds) {
      stop = SolveStatus::time_limit;
      break;
    }
    if (rep.num_cuts >= opts.max_cuts) {
      stop = SolveStatus::max_cuts;
      break;
    }

    TraceRecord r;
    const double nu_R = vbar - opts.eta * scale(vbar);
    const double nu = vbar - eps * scale(vbar);
    const double phi_xbar = kkt.objective;
    double beta = beta_policy(phi_xbar, nu_R, eps);

    auto tc = Clock::now();
    settings.time_limit_seconds = remaining();
    CutResult cut = dnn_cut(region, kkt.x, bound.zbar, nu_R, nu, beta, settings, have_cut_warm ? &cut_warm : nullptr);
    if (cut.status != CutStatus::ok) {
      beta *= 2.0;
      if (phi_xbar - nu_R > 0.0) beta = std::min(beta, phi_xbar - nu_R);
      settings.time_limit_seconds = remaining();
      cut = dnn_cut(region, kkt.x, bound.zbar, nu_R, nu, beta, settings);
    }
    r.cut_time = seconds_since(tc);
    if (cut.status != CutStatus::ok) {
      stop = seconds_since(t0) >= opts.time_limit_seconds ? SolveStatus::time_limit : SolveStatus::cut_failed;
      break;
    }
    cut_warm = std::move(cut.conic);
    have_cut_warm = true;

    region = region.with_row(cut.cut.row(), cut.cut.rhs(), RowTag{RowKind::cut, rep.num_cuts});
    rep.removed_bound = std::min(rep.removed_bound, cut.cut.w);
    rep.cuts.push_back(cut.cut);
    ++rep.num_cuts;

    tb = Clock::now();
    settings.time_limit_seconds = remaining();
    BoundResult next = dnn_lower_bound(region, settings, &bound.conic);
    r.bound_time = seconds_since(tb);
    if (next.status == BoundStatus::infeasible_region) {
      rep.region_bound = kInf;
      log(r);
      continue;
    }
    // The region only shrinks, so an earlier region bound stays valid.
    rep.region_bound = std::max(rep.region_bound, next.safe_bound);
    bound = std::move(next);

    ts = Clock::now();
    kkt = search(region, bound.zbar, opts.tol);
    r.search_time = seconds_since(ts);
    if (kkt.objective < rep.upper_bound) {
      rep.upper_bound = kkt.objective;
      rep.best_x = kkt.x;
    }
    log(r);
  }

  rep.lower_bound = std::min(rep.region_bound, rep.removed_bound);
  rep.final_gap = relative_gap(rep.upper_bound, rep.lower_bound, eps);
  rep.status = *stop;
  if (rep.status == SolveStatus::solved && rep.final_gap > eps + kGapSlack) rep.status = SolveStatus::cut_failed;
  rep.time_seconds = seconds_since(t0);
  return rep;
}

}  // namespace dcqp
