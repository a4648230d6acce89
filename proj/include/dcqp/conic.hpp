#pragma once

// Standard-form conic LP  min c'x  s.t.  A x = b,  x in K,  where K is an
// ordered product of free, nonnegative and PSD blocks. PSD blocks are stored
// packed (see pack_sym). The solver is an operator-splitting iteration with a
// factorized KKT system; it returns approximate primal-dual pairs only.

#include <Eigen/SparseCore>

#include <limits>
#include <string>
#include <vector>

#include "dcqp/linalg.hpp"

namespace dcqp {

using SpMat = Eigen::SparseMatrix<double>;

struct ConeBlock {
  enum class Kind { free, nonneg, psd };
  Kind kind = Kind::free;
  Eigen::Index size = 0;  // vector length, or matrix side for psd

  Eigen::Index dim() const { return kind == Kind::psd ? packed_size(size) : size; }

  static ConeBlock free_block(Eigen::Index k) { return {Kind::free, k}; }
  static ConeBlock nonneg(Eigen::Index k) { return {Kind::nonneg, k}; }
  static ConeBlock psd(Eigen::Index side) { return {Kind::psd, side}; }
};

using ConeLayout = std::vector<ConeBlock>;

Eigen::Index layout_dim(const ConeLayout& layout);
Eigen::Index block_offset(const ConeLayout& layout, std::size_t index);

struct ConicLP {
  Vec c;
  SpMat A;
  Vec b;
  ConeLayout cones;

  Eigen::Index dim() const { return c.size(); }
  void validate() const;
};

enum class ConicStatus { converged, max_iters, infeasibility_suspected };

const char* to_string(ConicStatus s);

struct ConicSolution {
  Vec x;  // primal, inside the cone product
  Vec y;  // equality multipliers
  Vec s;  // dual slack c - A'y, inside the dual cone
  double primal_residual = 0.0;  // |Ax - b|_inf / (1 + |b|_inf)
  double dual_residual = 0.0;    // |c - A'y - s|_inf / (1 + |c|_inf)
  double gap = 0.0;              // |c'x - b'y| / (1 + |c'x| + |b'y|)
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  ConicStatus status = ConicStatus::max_iters;
  int iterations = 0;
  double rho = 0.0;  // penalty at exit, reused by warm starts

  bool converged() const { return status == ConicStatus::converged; }
};

struct ConicSettings {
  double tol = 1e-7;
  int max_iters = 200000;
  double relaxation = 1.6;
  double time_limit_seconds = std::numeric_limits<double>::infinity();
  int check_every = 10;
  int refine_steps = 1;
  bool adaptive_rho = true;
  double initial_rho = 10.0;
  int anderson_memory = 10;  // 0 disables acceleration
};

ConicSolution solve_conic(const ConicLP& p, const ConicSettings& settings, const ConicSolution* warm = nullptr);

inline ConicSolution solve_conic(const ConicLP& p, double tol, int max_iters, const ConicSolution* warm = nullptr) {
  ConicSettings s;
  s.tol = tol;
  s.max_iters = max_iters;
  return solve_conic(p, s, warm);
}

// Projection of a flattened vector onto the cone product (or its dual, which
// replaces free blocks by {0}).
Vec project_cone(const Vec& v, const ConeLayout& layout, bool dual = false);

// PSD blocks come back as full symmetric matrices; other blocks as a column.
Mat extract_block(const Vec& flat, const ConeLayout& layout, std::size_t index);

}  // namespace dcqp
