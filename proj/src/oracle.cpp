#include "dcqp/oracle.hpp"

#include <cmath>
#include <optional>
#include <vector>

#include <Eigen/LU>

#include "dcqp/cvxqp.hpp"
#include "dcqp/error.hpp"
#include "dcqp/linalg.hpp"

namespace dcqp {

namespace {

std::int64_t count_subsets(Eigen::Index m, Eigen::Index n, std::int64_t cap) {
  std::int64_t total = 0;
  std::int64_t binom = 1;
  for (Eigen::Index s = 0; s <= std::min(m, n); ++s) {
    total += binom;
    if (total > cap) return total;
    binom = binom * (m - s) / (s + 1);
  }
  return total;
}

bool feasible(const ReducedInstance& inst, const Vec& x, double tol) {
  for (Eigen::Index i = 0; i < inst.rows(); ++i)
    if (inst.A.row(i).dot(x) - inst.b(i) > tol * (1.0 + std::abs(inst.b(i)))) return false;
  return true;
}

// Stationary point of the objective on {A_I x = b_I} when the reduced Hessian is
// positive definite; faces with a singular or indefinite reduced Hessian attain
// their minimum on a smaller face.
std::optional<Vec> face_minimizer(const ReducedInstance& inst, const Mat& AI, const Vec& bI) {
  const Eigen::Index n = inst.n();
  Vec xp = Vec::Zero(n);
  if (AI.rows() > 0) xp = AI.completeOrthogonalDecomposition().solve(bI);
  const Mat Z = nullspace_basis(AI);
  if (Z.cols() == 0) return xp;
  const Mat H = Z.transpose() * inst.Q * Z;
  const Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
  if (es.eigenvalues().minCoeff() <= 1e-10 * (1.0 + max_abs(inst.Q))) return std::nullopt;
  const Vec g = Z.transpose() * (inst.Q * xp + inst.d);
  return Vec(xp - Z * es.eigenvectors() * (es.eigenvalues().cwiseInverse().asDiagonal() *
                                            (es.eigenvectors().transpose() * g)));
}

}  // namespace

OracleResult global_qp_oracle(const ReducedInstance& inst, std::int64_t max_subsets) {
  const Eigen::Index n = inst.n();
  const Eigen::Index m = inst.rows();
  if (count_subsets(m, n, max_subsets) > max_subsets)
    throw DimensionError("global_qp_oracle: too many row subsets for n=" + std::to_string(n) +
                         ", rows=" + std::to_string(m));

  OracleResult best;
  std::vector<int> idx;
  auto visit = [&] {
    ++best.faces;
    const auto s = static_cast<Eigen::Index>(idx.size());
    Mat AI(s, n);
    Vec bI(s);
    for (Eigen::Index j = 0; j < s; ++j) {
      AI.row(j) = inst.A.row(idx[static_cast<std::size_t>(j)]);
      bI(j) = inst.b(idx[static_cast<std::size_t>(j)]);
    }
    if (s > 0) {
      Eigen::FullPivLU<Mat> lu(AI);
      lu.setThreshold(1e-10);
      if (lu.rank() < s) return;
    }
    const auto x = face_minimizer(inst, AI, bI);
    if (!x || !x->allFinite() || !feasible(inst, *x, 1e-9)) return;
    const double v = inst.objective(*x);
    if (v < best.value) {
      best.value = v;
      best.x = *x;
    }
  };

  for (Eigen::Index size = 0; size <= std::min(n, m); ++size) {
    idx.resize(static_cast<std::size_t>(size));
    for (Eigen::Index j = 0; j < size; ++j) idx[static_cast<std::size_t>(j)] = static_cast<int>(j);
    while (true) {
      visit();
      Eigen::Index j = size - 1;
      while (j >= 0 && idx[static_cast<std::size_t>(j)] == m - size + j) --j;
      if (j < 0) break;
      ++idx[static_cast<std::size_t>(j)];
      for (Eigen::Index l = j + 1; l < size; ++l)
        idx[static_cast<std::size_t>(l)] = idx[static_cast<std::size_t>(l - 1)] + 1;
    }
  }
  return best;
}

GridResult grid_min(const ReducedInstance& inst, int points_per_axis) {
  const Eigen::Index n = inst.n();
  if (n > 3) throw DimensionError("grid_min: n must be at most 3");
  if (points_per_axis < 2) throw DimensionError("grid_min: need at least 2 points per axis");
  GridResult out;

  Vec lo(n), hi(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    Vec e = Vec::Zero(n);
    e(i) = 1.0;
    const CvxQpResult a = solve_lp(e, inst.A, inst.b);
    const CvxQpResult b = solve_lp(-e, inst.A, inst.b);
    if (a.status == QpStatus::infeasible) return out;
    if (!a.ok() || !b.ok()) throw UnboundedRegionError("grid_min: region is unbounded");
    lo(i) = a.x(i);
    hi(i) = b.x(i);
  }

  const int k = points_per_axis;
  std::int64_t total = 1;
  for (Eigen::Index i = 0; i < n; ++i) total *= k;
  Vec x(n);
  for (std::int64_t flat = 0; flat < total; ++flat) {
    std::int64_t rem = flat;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto step = static_cast<double>(rem % k);
      rem /= k;
      x(i) = lo(i) + (hi(i) - lo(i)) * step / (k - 1);
    }
    if (!feasible(inst, x, 1e-12)) continue;
    ++out.feasible_points;
    const double v = inst.objective(x);
    if (v < out.value) {
      out.value = v;
      out.x = x;
    }
  }
  return out;
}

}  // namespace dcqp
