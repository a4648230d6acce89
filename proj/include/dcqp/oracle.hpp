#pragma once

#include <cstdint>
#include <limits>

#include "dcqp/instance.hpp"

namespace dcqp {

// Brute-force global minimizer for small instances. Test scaffolding only.
struct OracleResult {
  double value = std::numeric_limits<double>::infinity();  // +inf when the region is empty
  Vec x;
  std::int64_t faces = 0;  // row subsets examined
};

// Enumerates every independent subset of rows of size <= n and keeps the
// feasible stationary points of faces with a positive definite reduced Hessian.
// Throws DimensionError when the number of subsets exceeds max_subsets.
OracleResult global_qp_oracle(const ReducedInstance& inst, std::int64_t max_subsets = 2'000'000);

struct GridResult {
  double value = std::numeric_limits<double>::infinity();
  Vec x;
  std::int64_t feasible_points = 0;
};

// Minimum over the feasible points of a uniform grid on the bounding box (n <= 3).
GridResult grid_min(const ReducedInstance& inst, int points_per_axis);

}  // namespace dcqp
