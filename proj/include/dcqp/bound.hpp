#pragma once

#include <limits>

#include "dcqp/conic.hpp"
#include "dcqp/instance.hpp"

namespace dcqp {

// Lifted constraint rows: the constant row (0, ..., 0, 1) first, then
// (-a_i, b_i) for every row of the region. Appending a region row appends a
// lifted row, so packed index sets of the nonnegative block only grow at the end.
Mat lifted_rows(const Mat& A, const Vec& b);

// [[Q, d], [d', corner]]
Mat homogenized(const Mat& Q, const Vec& d, double corner);

// Matrix of  pack(Y) -> pack(G Y G')  for Y of side G.cols().
SpMat congruence_map(const Mat& G);

struct BoundCertificate {
  double lambda_star = 0.0;
  Mat S_star;
  Mat T_star;
  Mat Delta;
  double delta = 0.0;
  double safe_bound = -std::numeric_limits<double>::infinity();
};

enum class BoundStatus { ok, infeasible_region, solver_failed };

const char* to_string(BoundStatus s);

struct BoundResult {
  double safe_bound = -std::numeric_limits<double>::infinity();
  Vec zbar;
  BoundCertificate cert;
  BoundStatus status = BoundStatus::solver_failed;
  ConicSolution conic;
};

ConicLP assemble_dnn(const ReducedInstance& inst);

// Empty regions return status infeasible_region with safe_bound = +inf.
BoundResult dnn_lower_bound(const ReducedInstance& inst, const ConicSettings& settings,
                            const ConicSolution* warm = nullptr);

inline BoundResult dnn_lower_bound(const ReducedInstance& inst, double conic_tol = 1e-7,
                                   const ConicSolution* warm = nullptr) {
  ConicSettings s;
  s.tol = conic_tol;
  return dnn_lower_bound(inst, s, warm);
}

// lambda + min(0, lambda_min(Delta)) * (1 + radius^2)
double safeguarded_value(double lambda, const Mat& Delta, double radius, double* delta_out = nullptr);

}  // namespace dcqp
