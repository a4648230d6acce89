#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "dcqp/instance.hpp"

namespace dcqp {

struct Tolerances {
  double act = 1e-7;   // row i is active when |a_i'x - b_i| <= act * (1 + |b_i|)
  double pd = 1e-8;    // reduced Hessian counts as positive definite above -pd
  double obj = 1e-9;   // objective comparisons use obj * (1 + |phi|)
  int max_outer = 0;   // 0 means 100 * (rows + 1)

  double obj_slack(double phi) const { return obj * (1.0 + std::abs(phi)); }
  int outer_cap(Eigen::Index rows) const { return max_outer > 0 ? max_outer : static_cast<int>(100 * (rows + 1)); }
};

struct KktPoint {
  Vec x;
  std::vector<int> active;
  Vec multipliers;  // one per row, zero off the active set
  double kkt_residual = 0.0;
  double reduced_lambda_min = 0.0;
  bool second_order = false;
  bool certified = false;  // second order and stationarity residual within 1e-6 (1 + |d|_inf)
  double objective = 0.0;
  int iterations = 0;
  std::vector<double> trajectory;  // objective along the visited points
};

struct DcSplit {
  Mat M;
  Mat N;
};

std::vector<int> active_set(const Vec& x, const Mat& A, const Vec& b, double tol);

DcSplit dc_split(const Mat& Q);

// One minimization of the convex surrogate anchored at xt.
Vec gmc_step(const ReducedInstance& inst, const DcSplit& split, const Vec& xt);

// Minimizer of the objective over the region with the rows in `pinned` held
// tight. A nonconvex face is first left along negative curvature.
Vec restricted_qp_min(const ReducedInstance& inst, const Vec& start, std::span<const int> pinned);

// Step along a direction of most negative curvature on the current face until
// a new row becomes tight.
Vec facet_descent(const ReducedInstance& inst, const Vec& x, const Tolerances& tol = {});

// Active set, nonnegative least-squares multipliers and second-order data at x.
KktPoint certify_kkt(const ReducedInstance& inst, const Vec& x, const Tolerances& tol = {});

KktPoint finite_gmc(const ReducedInstance& inst, const Vec& x0, const Tolerances& tol = {});

}  // namespace dcqp
