#pragma once

// Primal active-set solver for  min 1/2 x'Hx + g'x  s.t.  A x <= b, with a
// subset of rows held at equality. H only needs to be positive semidefinite on
// the null space of the pinned rows; flat directions are followed as rays.

#include <optional>
#include <span>
#include <vector>

#include "dcqp/linalg.hpp"

namespace dcqp {

enum class QpStatus { optimal, infeasible, unbounded, nonconvex, iteration_limit };

const char* to_string(QpStatus s);

struct CvxQpResult {
  Vec x;
  Vec multipliers;  // one per row; >= 0 on free rows, any sign on pinned rows
  double objective = 0.0;
  double kkt_residual = 0.0;
  QpStatus status = QpStatus::optimal;
  int iterations = 0;
  std::vector<int> working_set;

  bool ok() const { return status == QpStatus::optimal; }
};

struct CvxQpOptions {
  double tol = 1e-9;
  int max_iters = 0;             // 0 picks a size-based cap
  const Vec* start = nullptr;    // warm start; repaired by a phase-one LP if infeasible
};

CvxQpResult solve_convex_qp(const Mat& H, const Vec& g, const Mat& A, const Vec& b,
                            std::span<const int> pinned, const CvxQpOptions& opts = {});

inline CvxQpResult solve_convex_qp(const Mat& H, const Vec& g, const Mat& A, const Vec& b,
                                   std::span<const int> pinned, double tol,
                                   const Vec* start = nullptr) {
  return solve_convex_qp(H, g, A, b, pinned, CvxQpOptions{tol, 0, start});
}

// Linear objective shorthand (H = 0).
CvxQpResult solve_lp(const Vec& g, const Mat& A, const Vec& b, std::span<const int> pinned = {},
                     const CvxQpOptions& opts = {});

// A point of {A x <= b, pinned rows at equality}, or nullopt when the smallest
// achievable uniform violation exceeds tol * (1 + |b|_inf).
std::optional<Vec> feasible_point(const Mat& A, const Vec& b, std::span<const int> pinned = {},
                                  double tol = 1e-9, const Vec* guess = nullptr);

// Euclidean projection onto {A x <= b}.
Vec project_onto_polytope(const Vec& z, const Mat& A, const Vec& b);

}  // namespace dcqp
