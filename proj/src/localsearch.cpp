#include "dcqp/localsearch.hpp"

#include <limits>

#include "dcqp/cvxqp.hpp"

namespace dcqp {

std::vector<int> active_set(const Vec& x, const Mat& A, const Vec& b, double tol) {
  std::vector<int> out;
  const Vec r = A * x - b;
  for (Eigen::Index i = 0; i < A.rows(); ++i)
    if (std::abs(r(i)) <= tol * (1.0 + std::abs(b(i)))) out.push_back(static_cast<int>(i));
  return out;
}

DcSplit dc_split(const Mat& Q) { return {spectral_part(Q, +1), spectral_part(Q, -1)}; }

namespace {

Mat rows_of(const Mat& A, std::span<const int> idx) {
  Mat out(static_cast<Eigen::Index>(idx.size()), A.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = A.row(idx[k]);
  return out;
}

}  // namespace

Vec gmc_step(const ReducedInstance& inst, const DcSplit& split, const Vec& xt) {
  CvxQpOptions opts;
  opts.start = &xt;
  auto res = solve_convex_qp(2.0 * split.M, Vec(2.0 * inst.d - 2.0 * (split.N * xt)), inst.A, inst.b, {}, opts);
  if (res.status == QpStatus::infeasible || res.status == QpStatus::unbounded)
    throw NumericalError(std::string("surrogate subproblem failed: ") + to_string(res.status));
  return res.x;
}

namespace {

struct CurvatureStep {
  Vec x;
  int blocking = -1;
};

// Moves from x along the most negative curvature direction of Q on
// null(A_face), oriented downhill, until the first row outside `face` is
// tight. Ties go to the smallest row index.
CurvatureStep curvature_step(const ReducedInstance& inst, const Vec& x, std::span<const int> face) {
  const Mat Z = nullspace_basis(rows_of(inst.A, face));
  if (Z.cols() == 0) throw Error("curvature step requested at a vertex");
  const auto eig = sym_eig(reduced_hessian(inst.Q, Z).matrix);
  Vec h = Z * eig.vectors.col(0);
  if ((inst.Q * x + inst.d).dot(h) > 0.0) h = -h;

  std::vector<char> on_face(static_cast<std::size_t>(inst.rows()), 0);
  for (int i : face) on_face[static_cast<std::size_t>(i)] = 1;
  double alpha = std::numeric_limits<double>::infinity();
  int blocking = -1;
  for (Eigen::Index i = 0; i < inst.rows(); ++i) {
    if (on_face[static_cast<std::size_t>(i)]) continue;
    const double ah = inst.A.row(i).dot(h);
    if (ah <= 1e-12 * inst.A.row(i).norm() * h.norm()) continue;
    const double step = std::max(0.0, inst.b(i) - inst.A.row(i).dot(x)) / ah;
    if (step < alpha) {
      alpha = step;
      blocking = static_cast<int>(i);
    }
  }
  if (blocking < 0) throw UnboundedRegionError("curvature step: no blocking row");
  return {x + alpha * h, blocking};
}

}  // namespace

Vec restricted_qp_min(const ReducedInstance& inst, const Vec& start, std::span<const int> pinned) {
  std::vector<int> face(pinned.begin(), pinned.end());
  Vec x = start;
  // A face that is not convex is left along negative curvature; each step pins
  // one more row, so this ends after at most rows() rounds.
  for (Eigen::Index round = 0; round <= inst.rows(); ++round) {
    CvxQpOptions opts;
    opts.start = &x;
    auto res = solve_convex_qp(2.0 * inst.Q, Vec(2.0 * inst.d), inst.A, inst.b, face, opts);
    if (res.status == QpStatus::infeasible || res.status == QpStatus::unbounded)
      throw NumericalError(std::string("restricted subproblem failed: ") + to_string(res.status));
    if (res.status != QpStatus::nonconvex) return res.x;
    auto step = curvature_step(inst, x, face);
    x = std::move(step.x);
    face.push_back(step.blocking);
  }
  throw NumericalError("restricted subproblem is not convex on any reachable face");
}

Vec facet_descent(const ReducedInstance& inst, const Vec& x, const Tolerances& tol) {
  const auto act = active_set(x, inst.A, inst.b, tol.act);
  return curvature_step(inst, x, act).x;
}

KktPoint certify_kkt(const ReducedInstance& inst, const Vec& x, const Tolerances& tol) {
  KktPoint pt;
  pt.x = x;
  pt.objective = inst.objective(x);
  pt.active = active_set(x, inst.A, inst.b, tol.act);
  pt.multipliers = Vec::Zero(inst.rows());
  const Mat AI = rows_of(inst.A, pt.active);
  const Vec grad = inst.Q * x + inst.d;

  const auto k = static_cast<Eigen::Index>(pt.active.size());
  if (k > 0) {
    // min 1/2 |A_I' lam + grad|^2  s.t.  lam >= 0
    const Mat H = AI * AI.transpose();
    const Vec g = AI * grad;
    const Mat negI = -Mat::Identity(k, k);
    auto nnls = solve_convex_qp(H, g, negI, Vec::Zero(k), {}, 1e-12);
    if (nnls.status == QpStatus::optimal || nnls.status == QpStatus::iteration_limit) {
      const Vec lam = nnls.x.cwiseMax(0.0);
      for (Eigen::Index j = 0; j < k; ++j) pt.multipliers(pt.active[static_cast<std::size_t>(j)]) = lam(j);
    }
  }
  pt.kkt_residual = max_abs(Vec(grad + inst.A.transpose() * pt.multipliers));
  const Mat Z = nullspace_basis(AI);
  pt.reduced_lambda_min = reduced_hessian(inst.Q, Z).lambda_min;
  pt.second_order = pt.reduced_lambda_min > -tol.pd;
  pt.certified = pt.second_order && pt.kkt_residual <= 1e-6 * (1.0 + max_abs(inst.d));
  return pt;
}

KktPoint finite_gmc(const ReducedInstance& inst, const Vec& x0, const Tolerances& tol) {
  const DcSplit split = dc_split(inst.Q);
  const int cap = tol.outer_cap(inst.rows());
  std::vector<double> traj;
  Vec x = x0;
  double phi = inst.objective(x);
  traj.push_back(phi);

  for (int k = 0; k < cap; ++k) {
    const auto act = active_set(x, inst.A, inst.b, tol.act);
    const Mat Z = nullspace_basis(rows_of(inst.A, act));
    const double lmin = reduced_hessian(inst.Q, Z).lambda_min;
    if (lmin > -tol.pd) {
      Vec xt = restricted_qp_min(inst, x, act);
      double phit = inst.objective(xt);
      if (phit > phi + tol.obj_slack(phi)) {
        xt = x;
        phit = phi;
      }
      traj.push_back(phit);
      const Vec xb = gmc_step(inst, split, xt);
      const double phib = inst.objective(xb);
      if (phib >= phit - tol.obj_slack(phit)) {
        KktPoint out = certify_kkt(inst, xt, tol);
        out.iterations = k + 1;
        out.trajectory = std::move(traj);
        return out;
      }
      x = xb;
      phi = phib;
    } else {
      x = facet_descent(inst, x, tol);
      phi = inst.objective(x);
    }
    traj.push_back(phi);
  }
  KktPoint out = certify_kkt(inst, x, tol);
  out.certified = false;
  out.iterations = cap;
  out.trajectory = std::move(traj);
  return out;
}

}  // namespace dcqp
