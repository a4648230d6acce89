#pragma once

#include <limits>

#include "dcqp/bound.hpp"
#include "dcqp/localsearch.hpp"

namespace dcqp {

// Keeps c'(x - anchor) >= 1, i.e. appends the row  -c'x <= -c'anchor - 1.
// w is a lower bound on the objective over the removed slab
// {x in region : c'(x - anchor) <= 1}. A zero c removes the whole region.
struct Cut {
  Vec c;
  Vec anchor;
  double w = -std::numeric_limits<double>::infinity();

  Vec row() const { return -c; }
  double rhs() const { return -c.dot(anchor) - 1.0; }
  bool removes_all() const { return c.isZero(0.0); }
};

struct CutCertificate {
  Mat S;
  Mat T;
  double beta = 0.0;
  Mat Delta;
  double delta = 0.0;
  double nu_R = 0.0;
  // Lower bound on (g'v)(h'v) over the slab when the anchor is only an
  // approximate KKT point; zero when the multiplier column is nonnegative there.
  double kkt_guard = 0.0;
  double w_certificate = -std::numeric_limits<double>::infinity();
  double w_refined = -std::numeric_limits<double>::infinity();
  bool refined = false;
};

enum class CutStatus { ok, failed, not_applicable };

const char* to_string(CutStatus s);

struct ReducedCoords {
  Eigen::Index k = 0;
  std::vector<int> basis;  // n row indices; the first k span the active normals
  std::vector<int> rest;   // remaining rows, in order
  Mat R;
  Vec p;
  double r = 0.0;
  Mat F;
  Vec w;
  Vec ybar;
  Mat D;
  Vec q;
  double upsilon = 0.0;
  Mat H;
};

struct CutResult {
  Cut cut;
  CutCertificate cert;
  CutStatus status = CutStatus::failed;
  ConicStatus conic_status = ConicStatus::max_iters;
  ConicSolution conic;   // cut program solution; dnn_cut only
  ReducedCoords coords;  // lp_cut only
  Vec theta;             // lp_cut only
};

double beta_policy(double phi_xbar, double nu_R, double eps);

ConicLP assemble_cut_sdp(const ReducedInstance& inst, const Vec& xbar, const Vec& zbar, double nu_R, double beta);

// `warm` may come from a cut program on a region with fewer rows.
CutResult dnn_cut(const ReducedInstance& inst, const Vec& xbar, const Vec& zbar, double nu_R, double nu,
                  double beta, const ConicSettings& settings = {}, const ConicSolution* warm = nullptr);

// Lower bound on (g'v)(h'v) over the slab, see CutCertificate::kkt_guard.
double kkt_guard(const ReducedInstance& inst, const Vec& xbar, const Vec& c, double beta);

ReducedCoords reduced_coords(const ReducedInstance& inst, const KktPoint& kkt, const Tolerances& tol = {});

CutResult lp_cut(const ReducedInstance& inst, const KktPoint& kkt, double nu_R, double beta,
                 const ConicSettings& settings = {}, const Tolerances& tol = {});

}  // namespace dcqp
