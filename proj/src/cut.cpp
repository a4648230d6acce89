#include "dcqp/cut.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "dcqp/cvxqp.hpp"

namespace dcqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Multiplier column of the cut identity: (Q xbar + d; -xbar'Q xbar - d'xbar + beta).
Vec multiplier_column(const ReducedInstance& inst, const Vec& xbar, double beta) {
  const Eigen::Index n = inst.n();
  const Vec grad = inst.Q * xbar + inst.d;
  Vec g(n + 1);
  g.head(n) = grad;
  g(n) = -grad.dot(xbar) + beta;
  return g;
}

Vec slab_column(const Vec& c, const Vec& xbar) {
  const Eigen::Index n = c.size();
  Vec h(n + 1);
  h.head(n) = -c;
  h(n) = 1.0 + c.dot(xbar);
  return h;
}

Mat sym_outer(const Vec& u, const Vec& v) { return 0.5 * (u * v.transpose() + v * u.transpose()); }

ReducedInstance removed_region(const ReducedInstance& inst, const Vec& c, const Vec& xbar) {
  return inst.with_row(c, c.dot(xbar) + 1.0, RowTag{RowKind::cut, -1});
}

double refine_bound(const ReducedInstance& inst, const Vec& c, const Vec& xbar, const ConicSettings& settings) {
  const BoundResult br = dnn_lower_bound(removed_region(inst, c, xbar), settings);
  return br.status == BoundStatus::solver_failed ? -kInf : br.safe_bound;
}

}  // namespace

const char* to_string(CutStatus s) {
  switch (s) {
    case CutStatus::ok: return "ok";
    case CutStatus::failed: return "failed";
    case CutStatus::not_applicable: return "not_applicable";
  }
  return "unknown";
}

double beta_policy(double phi_xbar, double nu_R, double eps) {
  return 0.5 * std::max(phi_xbar - nu_R, eps * 1e-2);
}

ConicLP assemble_cut_sdp(const ReducedInstance& inst, const Vec& xbar, const Vec& zbar, double nu_R, double beta) {
  const Eigen::Index n = inst.n();
  const Mat G = lifted_rows(inst.A, inst.b);
  const SpMat L = congruence_map(G.transpose());
  const Eigen::Index ps = packed_size(n + 1);
  const Eigen::Index pt = packed_size(G.rows());
  const Vec g = multiplier_column(inst, xbar, beta);

  ConicLP lp;
  lp.cones = {ConeBlock::psd(n + 1), ConeBlock::free_block(n), ConeBlock::nonneg(pt)};
  lp.c = Vec::Zero(ps + n + pt);
  lp.c.segment(ps, n) = zbar - xbar;

  Vec en = Vec::Zero(n + 1);
  en(n) = 1.0;
  lp.b = pack_sym(homogenized(inst.Q, inst.d, inst.offset - nu_R) - sym_outer(g, en));

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(ps + ps * n + L.nonZeros()));
  for (Eigen::Index q = 0; q < ps; ++q) trip.emplace_back(q, q, 1.0);
  for (Eigen::Index j = 0; j < n; ++j) {
    Vec pj = Vec::Zero(n + 1);
    pj(j) = -1.0;
    pj(n) = xbar(j);
    const Vec col = pack_sym(sym_outer(g, pj));
    for (Eigen::Index q = 0; q < ps; ++q)
      if (col(q) != 0.0) trip.emplace_back(q, ps + j, col(q));
  }
  for (Eigen::Index j = 0; j < L.outerSize(); ++j)
    for (SpMat::InnerIterator it(L, j); it; ++it) trip.emplace_back(it.row(), ps + n + j, it.value());
  lp.A.resize(ps, ps + n + pt);
  lp.A.setFromTriplets(trip.begin(), trip.end());
  return lp;
}

double kkt_guard(const ReducedInstance& inst, const Vec& xbar, const Vec& c, double beta) {
  const Eigen::Index n = inst.n();
  Mat A(inst.rows() + 1, n);
  Vec b(inst.rows() + 1);
  A << inst.A, c.transpose();
  b << inst.b, c.dot(xbar) + 1.0;

  const Vec grad = inst.Q * xbar + inst.d;
  CvxQpOptions opts;
  opts.start = &xbar;
  const CvxQpResult low = solve_lp(grad, A, b, {}, opts);
  if (!low.ok()) return -kInf;
  const double m_star = grad.dot(low.x - xbar) + beta;
  if (m_star >= 0.0) return 0.0;

  const CvxQpResult reach = solve_lp(c, A, b, {}, opts);
  if (!reach.ok()) return -kInf;
  const double h_max = 1.0 - c.dot(reach.x - xbar);
  return m_star * std::max(h_max, 0.0);
}

CutResult dnn_cut(const ReducedInstance& inst, const Vec& xbar, const Vec& zbar, double nu_R, double nu,
                  double beta, const ConicSettings& settings, const ConicSolution* warm) {
  const Eigen::Index n = inst.n();
  CutResult out;
  const ConicLP lp = assemble_cut_sdp(inst, xbar, zbar, nu_R, beta);
  out.conic = solve_conic(lp, settings, warm);
  out.conic_status = out.conic.status;

  const Eigen::Index ps = packed_size(n + 1);
  Vec c = out.conic.x.segment(ps, n);
  if (!c.allFinite()) c.setZero();
  CutCertificate& cert = out.cert;
  cert.beta = beta;
  cert.nu_R = nu_R;
  cert.T = unpack_sym(Vec(out.conic.x.tail(lp.cones[2].dim()))).cwiseMax(0.0);

  const Mat G = lifted_rows(inst.A, inst.b);
  Mat rest = homogenized(inst.Q, inst.d, inst.offset - nu_R) - G.transpose() * cert.T * G -
             sym_outer(multiplier_column(inst, xbar, beta), slab_column(c, xbar));
  rest = 0.5 * (rest + rest.transpose()).eval();
  cert.S = psd_project(rest);
  cert.Delta = rest - cert.S;
  cert.kkt_guard = kkt_guard(inst, xbar, c, beta);
  cert.w_certificate = safeguarded_value(nu_R, cert.Delta, inst.radius, &cert.delta) + cert.kkt_guard;

  double w = cert.w_certificate;
  if (w < nu) {
    cert.refined = true;
    cert.w_refined = refine_bound(inst, c, xbar, settings);
    w = std::max(w, cert.w_refined);
  }

  out.cut.c = std::move(c);
  out.cut.anchor = xbar;
  out.cut.w = w;
  out.status = w >= nu ? CutStatus::ok : CutStatus::failed;
  return out;
}

ReducedCoords reduced_coords(const ReducedInstance& inst, const KktPoint& kkt, const Tolerances& tol) {
  const Eigen::Index n = inst.n();
  const Eigen::Index m = inst.rows();
  ReducedCoords rc;

  // Greedy pivoted elimination: multiplier support, then the other active rows,
  // then everything else, keeping rows that raise the rank.
  Mat span(0, n);
  auto try_add = [&](int i) {
    Mat next(span.rows() + 1, n);
    next << span, inst.A.row(i);
    Eigen::FullPivLU<Mat> lu(next);
    lu.setThreshold(1e-10);
    if (lu.rank() < next.rows()) return false;
    span = std::move(next);
    rc.basis.push_back(i);
    return true;
  };

  const double mscale = 1e-12 * (1.0 + max_abs(kkt.multipliers));
  for (int i = 0; i < m; ++i)
    if (kkt.multipliers(i) > mscale && !try_add(i)) return {};
  for (int i : kkt.active)
    if (std::find(rc.basis.begin(), rc.basis.end(), i) == rc.basis.end()) try_add(i);
  rc.k = static_cast<Eigen::Index>(rc.basis.size());
  for (int i = 0; i < m && span.rows() < n; ++i)
    if (std::find(rc.basis.begin(), rc.basis.end(), i) == rc.basis.end()) try_add(i);
  if (span.rows() < n || rc.k == 0) return {};
  for (int i = 0; i < m; ++i)
    if (std::find(rc.basis.begin(), rc.basis.end(), i) == rc.basis.end()) rc.rest.push_back(i);

  Vec bB(n);
  for (Eigen::Index j = 0; j < n; ++j) bB(j) = inst.b(rc.basis[static_cast<std::size_t>(j)]);
  Mat AN(static_cast<Eigen::Index>(rc.rest.size()), n);
  Vec bN(AN.rows());
  for (Eigen::Index j = 0; j < AN.rows(); ++j) {
    AN.row(j) = inst.A.row(rc.rest[static_cast<std::size_t>(j)]);
    bN(j) = inst.b(rc.rest[static_cast<std::size_t>(j)]);
  }

  const Eigen::PartialPivLU<Mat> lu(span);
  const Mat Binv = lu.inverse();
  const Vec xb = Binv * bB;
  rc.R = Binv.transpose() * inst.Q * Binv;
  rc.R = 0.5 * (rc.R + rc.R.transpose()).eval();
  rc.p = -Binv.transpose() * inst.d - rc.R * bB;
  rc.r = (inst.Q * xb + 2.0 * inst.d).dot(xb) + inst.offset;
  rc.F = -AN * Binv;
  rc.w = bN - AN * xb;
  rc.ybar = bB - span * kkt.x;

  const Eigen::Index k = rc.k;
  if (k == n) {
    rc.D = rc.R;
    rc.q = rc.p;
    rc.upsilon = rc.r;
    rc.H = Mat::Zero(n + 1, n + 1);
    return rc;
  }
  const Eigen::Index f = n - k;
  const Mat R11 = rc.R.topLeftCorner(k, k);
  const Mat R12 = rc.R.topRightCorner(k, f);
  const Mat R22 = rc.R.bottomRightCorner(f, f);
  if (lambda_min(R22) <= tol.pd * (1.0 + max_abs(R22))) {
    rc.basis.clear();
    return rc;
  }
  const Eigen::LLT<Mat> chol(R22);
  const Vec p1 = rc.p.head(k);
  const Vec p2 = rc.p.tail(f);
  rc.D = Mat::Zero(n, n);
  rc.D.topLeftCorner(k, k) = R11 - R12 * chol.solve(R12.transpose());
  rc.D = 0.5 * (rc.D + rc.D.transpose()).eval();
  rc.q = Vec::Zero(n);
  rc.q.head(k) = p1 - R12 * chol.solve(p2);
  rc.upsilon = rc.r - p2.dot(chol.solve(p2));

  Mat side(n + 1, f);
  side << R12, R22, p2.transpose();
  rc.H = side * chol.solve(side.transpose());
  return rc;
}

CutResult lp_cut(const ReducedInstance& inst, const KktPoint& kkt, double nu_R, double beta,
                 const ConicSettings& settings, const Tolerances& tol) {
  const Eigen::Index n = inst.n();
  CutResult out;
  out.status = CutStatus::not_applicable;
  out.cert.beta = beta;
  out.cert.nu_R = nu_R;
  if (!kkt.second_order) return out;

  ReducedCoords rc = reduced_coords(inst, kkt, tol);
  if (rc.basis.empty()) return out;
  const Eigen::Index k = rc.k;
  const double qtol = 1e-12 * (1.0 + max_abs(rc.q));
  if (beta <= 0.0 && rc.q.head(k).minCoeff() <= qtol) return out;

  // LP in z = (y, y0) >= 0:  min q'y + beta y0,  D_i'y + q_i y0 = -1,  F y - w y0 <= 0.
  const Eigen::Index nr = static_cast<Eigen::Index>(rc.rest.size());
  Mat A = Mat::Zero(1 + nr + n + 1, n + 1);
  Vec b = Vec::Zero(A.rows());
  A.block(1, 0, nr, n) = rc.F;
  A.block(1, n, nr, 1) = -rc.w;
  A.bottomRows(n + 1) = -Mat::Identity(n + 1, n + 1);
  b(0) = -1.0;
  Vec cost(n + 1);
  cost << rc.q.cwiseMax(0.0), beta;
  const int pinned[] = {0};

  Vec theta = Vec::Zero(n);
  for (Eigen::Index i = 0; i < k; ++i) {
    A.block(0, 0, 1, n) = rc.D.row(i);
    A(0, n) = rc.q(i);
    const CvxQpResult res = solve_lp(cost, A, b, pinned);
    if (res.status == QpStatus::infeasible) continue;
    if (!res.ok() || res.objective <= 1e-12) return out;
    theta(i) = 1.0 / res.objective;
  }

  Mat B(n, n);
  for (Eigen::Index j = 0; j < n; ++j) B.row(j) = inst.A.row(rc.basis[static_cast<std::size_t>(j)]);
  out.cut.c = -B.transpose() * theta;
  out.cut.anchor = kkt.x;
  out.cut.w = refine_bound(inst, out.cut.c, kkt.x, settings);
  out.cert.refined = true;
  out.cert.w_refined = out.cut.w;
  out.theta = std::move(theta);
  out.coords = std::move(rc);
  out.status = std::isfinite(out.cut.w) ? CutStatus::ok : CutStatus::failed;
  return out;
}

}  // namespace dcqp
