#include "dcqp/bound.hpp"

#include <cmath>

#include "dcqp/cvxqp.hpp"

namespace dcqp {

const char* to_string(BoundStatus s) {
  switch (s) {
    case BoundStatus::ok: return "ok";
    case BoundStatus::infeasible_region: return "infeasible_region";
    case BoundStatus::solver_failed: return "solver_failed";
  }
  return "unknown";
}

Mat lifted_rows(const Mat& A, const Vec& b) {
  const Eigen::Index n = A.cols();
  Mat G = Mat::Zero(A.rows() + 1, n + 1);
  G(0, n) = 1.0;
  G.bottomLeftCorner(A.rows(), n) = -A;
  G.bottomRightCorner(A.rows(), 1) = b;
  return G;
}

Mat homogenized(const Mat& Q, const Vec& d, double corner) {
  const Eigen::Index n = d.size();
  Mat C(n + 1, n + 1);
  C.topLeftCorner(n, n) = Q;
  C.topRightCorner(n, 1) = d;
  C.bottomLeftCorner(1, n) = d.transpose();
  C(n, n) = corner;
  return C;
}

SpMat congruence_map(const Mat& G) {
  const Eigen::Index rows = G.rows();
  const Eigen::Index cols = G.cols();
  const double r2 = std::sqrt(2.0);
  std::vector<std::vector<std::pair<Eigen::Index, double>>> nz(static_cast<std::size_t>(rows));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index k = 0; k < cols; ++k)
      if (G(i, k) != 0.0) nz[static_cast<std::size_t>(i)].emplace_back(k, G(i, k));

  std::vector<Eigen::Triplet<double>> trip;
  for (Eigen::Index j = 0; j < rows; ++j)
    for (Eigen::Index i = 0; i <= j; ++i) {
      const Eigen::Index out = packed_index(i, j);
      const double s_out = i == j ? 1.0 : r2;
      for (const auto& [k, gik] : nz[static_cast<std::size_t>(i)])
        for (const auto& [l, gjl] : nz[static_cast<std::size_t>(j)]) {
          const double s_in = k == l ? 1.0 : r2;
          trip.emplace_back(out, packed_index(k, l), s_out * gik * gjl / s_in);
        }
    }
  SpMat L(packed_size(rows), packed_size(cols));
  L.setFromTriplets(trip.begin(), trip.end());
  L.prune(0.0);
  return L;
}

ConicLP assemble_dnn(const ReducedInstance& inst) {
  const Eigen::Index n = inst.n();
  const Mat G = lifted_rows(inst.A, inst.b);
  const SpMat L = congruence_map(G);
  const Eigen::Index py = packed_size(n + 1);
  const Eigen::Index pt = packed_size(G.rows());

  ConicLP lp;
  lp.cones = {ConeBlock::psd(n + 1), ConeBlock::nonneg(pt)};
  lp.c = Vec::Zero(py + pt);
  lp.c.head(py) = pack_sym(homogenized(inst.Q, inst.d, inst.offset));

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(L.nonZeros() + pt + 1));
  trip.emplace_back(0, packed_index(n, n), 1.0);
  for (Eigen::Index j = 0; j < L.outerSize(); ++j)
    for (SpMat::InnerIterator it(L, j); it; ++it) trip.emplace_back(1 + it.row(), j, it.value());
  for (Eigen::Index q = 0; q < pt; ++q) trip.emplace_back(1 + q, py + q, -1.0);
  lp.A.resize(1 + pt, py + pt);
  lp.A.setFromTriplets(trip.begin(), trip.end());
  lp.b = Vec::Zero(1 + pt);
  lp.b(0) = 1.0;
  return lp;
}

double safeguarded_value(double lambda, const Mat& Delta, double radius, double* delta_out) {
  const double delta = std::min(0.0, lambda_min(Delta));
  if (delta_out) *delta_out = delta;
  return lambda + delta * (1.0 + radius * radius);
}

BoundResult dnn_lower_bound(const ReducedInstance& inst, const ConicSettings& settings, const ConicSolution* warm) {
  BoundResult out;
  const Eigen::Index n = inst.n();
  if (!feasible_point(inst.A, inst.b)) {
    out.status = BoundStatus::infeasible_region;
    out.safe_bound = std::numeric_limits<double>::infinity();
    out.cert.safe_bound = out.safe_bound;
    return out;
  }

  const ConicLP lp = assemble_dnn(inst);
  out.conic = solve_conic(lp, settings, warm);
  const ConicSolution& sol = out.conic;

  // Any (lambda, T >= 0) yields a valid bound once the slack is chosen as the
  // PSD part of the remainder, so the multipliers of the lifted rows and the
  // cone slack are both tried as T and the better bound is kept.
  const Mat G = lifted_rows(inst.A, inst.b);
  const Eigen::Index pt = lp.cones[1].dim();
  const double lambda = sol.y(0);
  bool first = true;
  for (const Vec& t : {Vec(sol.y.tail(pt)), Vec(sol.s.tail(pt))}) {
    BoundCertificate c;
    c.lambda_star = lambda;
    c.T_star = unpack_sym(t).cwiseMax(0.0);
    Mat rest = homogenized(inst.Q, inst.d, inst.offset - lambda) - G.transpose() * c.T_star * G;
    rest = 0.5 * (rest + rest.transpose()).eval();
    c.S_star = psd_project(rest);
    c.Delta = rest - c.S_star;
    c.safe_bound = safeguarded_value(lambda, c.Delta, inst.radius, &c.delta);
    if (first || c.safe_bound > out.cert.safe_bound) out.cert = std::move(c);
    first = false;
  }
  const BoundCertificate& cert = out.cert;

  const Mat Y = extract_block(sol.x, lp.cones, 0);
  Vec z = Y.col(n).head(n);
  const Vec viol = inst.A * z - inst.b;
  bool outside = false;
  for (Eigen::Index i = 0; i < viol.size(); ++i)
    if (viol(i) > 1e-9 * (1.0 + std::abs(inst.b(i)))) outside = true;
  if (outside) z = project_onto_polytope(z, inst.A, inst.b);
  out.zbar = std::move(z);

  if (sol.converged()) {
    out.status = BoundStatus::ok;
    out.safe_bound = cert.safe_bound;
  } else {
    out.status = BoundStatus::solver_failed;
    out.safe_bound = -std::numeric_limits<double>::infinity();
  }
  return out;
}

}  // namespace dcqp
