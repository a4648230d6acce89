#include "dcqp/conic.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

#include <algorithm>
#include <chrono>
#include <cmath>

namespace dcqp {

const char* to_string(ConicStatus s) {
  switch (s) {
    case ConicStatus::converged: return "converged";
    case ConicStatus::max_iters: return "max_iters";
    case ConicStatus::infeasibility_suspected: return "infeasibility_suspected";
  }
  return "unknown";
}

Eigen::Index layout_dim(const ConeLayout& layout) {
  Eigen::Index total = 0;
  for (const auto& blk : layout) total += blk.dim();
  return total;
}

Eigen::Index block_offset(const ConeLayout& layout, std::size_t index) {
  if (index >= layout.size()) throw DimensionError("cone block index out of range");
  Eigen::Index off = 0;
  for (std::size_t k = 0; k < index; ++k) off += layout[k].dim();
  return off;
}

void ConicLP::validate() const {
  if (layout_dim(cones) != c.size()) throw DimensionError("cone layout does not match the variable dimension");
  if (A.cols() != c.size()) throw DimensionError("constraint matrix column count differs from the variable dimension");
  if (A.rows() != b.size()) throw DimensionError("constraint matrix row count differs from the right-hand side");
}

namespace {

void project_psd_packed(Eigen::Ref<Vec> v) {
  const Mat S = unpack_sym(v);
  Eigen::SelfAdjointEigenSolver<Mat> es(S);
  if (es.eigenvalues()(0) >= 0.0) return;
  const Vec lam = es.eigenvalues().cwiseMax(0.0);
  v = pack_sym(Mat(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose()));
}

void project_in_place(Vec& v, const ConeLayout& layout, bool dual) {
  Eigen::Index off = 0;
  for (const auto& blk : layout) {
    const Eigen::Index len = blk.dim();
    switch (blk.kind) {
      case ConeBlock::Kind::free:
        if (dual) v.segment(off, len).setZero();
        break;
      case ConeBlock::Kind::nonneg: v.segment(off, len) = v.segment(off, len).cwiseMax(0.0); break;
      case ConeBlock::Kind::psd: project_psd_packed(v.segment(off, len)); break;
    }
    off += len;
  }
}

struct Scaling {
  Vec row;  // D
  Vec col;  // E, constant across each PSD block
  double cost = 1.0;
  double rhs = 1.0;
};

Scaling equilibrate(const SpMat& A, const Vec& b, const Vec& c, const ConeLayout& layout, int passes) {
  const Eigen::Index m = A.rows();
  const Eigen::Index n = A.cols();
  Scaling sc{Vec::Ones(m), Vec::Ones(n)};
  constexpr double lo = 1e-4;
  constexpr double hi = 1e4;
  for (int pass = 0; pass < passes; ++pass) {
    Vec rmax = Vec::Zero(m);
    Vec cmax = Vec::Zero(n);
    for (Eigen::Index j = 0; j < A.outerSize(); ++j)
      for (SpMat::InnerIterator it(A, j); it; ++it) {
        const double v = std::abs(it.value()) * sc.row(it.row()) * sc.col(j);
        rmax(it.row()) = std::max(rmax(it.row()), v);
        cmax(j) = std::max(cmax(j), v);
      }
    Eigen::Index off = 0;
    for (const auto& blk : layout) {
      const Eigen::Index len = blk.dim();
      if (blk.kind == ConeBlock::Kind::psd && len > 0) {
        const double mean = cmax.segment(off, len).mean();
        cmax.segment(off, len).setConstant(mean);
      }
      off += len;
    }
    for (Eigen::Index i = 0; i < m; ++i)
      if (rmax(i) > 0.0) sc.row(i) = std::clamp(sc.row(i) / std::sqrt(rmax(i)), lo, hi);
    for (Eigen::Index j = 0; j < n; ++j)
      if (cmax(j) > 0.0) sc.col(j) = std::clamp(sc.col(j) / std::sqrt(cmax(j)), lo, hi);
  }
  const double cn = max_abs(Vec(sc.col.cwiseProduct(c)));
  const double bn = max_abs(Vec(sc.row.cwiseProduct(b)));
  sc.cost = cn > 1e-6 ? 1.0 / cn : 1.0;
  sc.rhs = bn > 1e-6 ? 1.0 / bn : 1.0;
  return sc;
}

// Solves the regularized system [rho I, A'; A, -eps I] [x; lam] = [r1; r2].
// Three strategies, picked by size: dense normal equations over the rows when
// there are few rows; elimination of slack columns (a single nonzero in a row
// that holds no other such column) followed by a dense solve over the remaining
// columns; sparse LDL' otherwise.
class KktSystem {
public:
  KktSystem(const SpMat& As, double eps) : As_(As), eps_(eps) {
    const Eigen::Index n = As_.cols();
    const Eigen::Index m = As_.rows();
    Eigen::VectorXi owner = Eigen::VectorXi::Constant(m, -1);
    Eigen::VectorXi count(n);
    for (Eigen::Index j = 0; j < n; ++j) count(j) = static_cast<int>(As_.col(j).nonZeros());
    for (Eigen::Index j = 0; j < n; ++j) {
      if (count(j) != 1) continue;
      SpMat::InnerIterator it(As_, j);
      if (owner(it.row()) < 0) owner(it.row()) = static_cast<int>(j);
    }
    slack_of_row_ = owner;
    Eigen::Index ns = (owner.array() >= 0).count();
    const double p = static_cast<double>(n - ns);
    const double m0 = static_cast<double>(m - ns);
    const double rows_cost = static_cast<double>(m) * m * m;
    const double slack_cost = p * p * p + m0 * m0 * m0;
    if (m <= kDenseLimit && (rows_cost <= slack_cost || p > kDenseLimit || m0 > kDenseLimit))
      mode_ = Mode::rows;
    else if (p <= kDenseLimit && m0 <= kDenseLimit && ns > 0)
      mode_ = Mode::slack;
    else
      mode_ = Mode::sparse;
    if (mode_ == Mode::slack) split_slack();
  }

  void factor(double rho) {
    rho_ = rho;
    switch (mode_) {
      case Mode::rows: factor_rows(); break;
      case Mode::slack: factor_slack(); break;
      case Mode::sparse: factor_sparse(); break;
    }
  }

  void solve(const Vec& r1, const Vec& r2, int refine, Vec& x, Vec& lam) const {
    const Eigen::Index n = As_.cols();
    const Eigen::Index m = As_.rows();
    solve_once(r1, r2, x, lam);
    for (int k = 0; k < refine; ++k) {
      const Vec e1 = r1 - rho_ * x - As_.transpose() * lam;
      const Vec e2 = r2 - As_ * x + eps_ * lam;
      Vec dx(n), dl(m);
      solve_once(e1, e2, dx, dl);
      x += dx;
      lam += dl;
    }
  }

private:
  enum class Mode { rows, slack, sparse };
  static constexpr Eigen::Index kDenseLimit = 1500;

  void solve_once(const Vec& r1, const Vec& r2, Vec& x, Vec& lam) const {
    switch (mode_) {
      case Mode::rows: {
        lam = rows_llt_.solve(Vec(As_ * r1 / rho_ - r2));
        x = (r1 - As_.transpose() * lam) / rho_;
        return;
      }
      case Mode::slack: solve_slack(r1, r2, x, lam); return;
      case Mode::sparse: {
        const Eigen::Index n = As_.cols();
        Vec rhs(n + As_.rows());
        rhs << r1, r2;
        const Vec sol = ldlt_.solve(rhs);
        x = sol.head(n);
        lam = sol.tail(As_.rows());
        return;
      }
    }
  }

  void factor_rows() {
    const SpMat AAt = As_ * As_.transpose();
    Mat M = Mat(AAt) / rho_;
    M.diagonal().array() += eps_;
    rows_llt_.compute(M);
    if (rows_llt_.info() != Eigen::Success) throw NumericalError("KKT factorization failed");
  }

  void factor_sparse() {
    const Eigen::Index n = As_.cols();
    const Eigen::Index m = As_.rows();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(static_cast<std::size_t>(n + m + As_.nonZeros()));
    for (Eigen::Index j = 0; j < n; ++j) trip.emplace_back(j, j, rho_);
    for (Eigen::Index j = 0; j < As_.outerSize(); ++j)
      for (SpMat::InnerIterator it(As_, j); it; ++it) trip.emplace_back(n + it.row(), j, it.value());
    for (Eigen::Index i = 0; i < m; ++i) trip.emplace_back(n + i, n + i, -eps_);
    SpMat K(n + m, n + m);
    K.setFromTriplets(trip.begin(), trip.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(K);
      analyzed_ = true;
    }
    ldlt_.factorize(K);
    if (ldlt_.info() != Eigen::Success) throw NumericalError("KKT factorization failed");
  }

  void split_slack() {
    const Eigen::Index n = As_.cols();
    const Eigen::Index m = As_.rows();
    Eigen::VectorXi is_slack = Eigen::VectorXi::Zero(n);
    for (Eigen::Index i = 0; i < m; ++i) {
      if (slack_of_row_(i) >= 0) {
        const int j = slack_of_row_(i);
        is_slack(j) = 1;
        srow_.push_back(static_cast<int>(i));
        scol_.push_back(j);
      } else {
        zrow_.push_back(static_cast<int>(i));
      }
    }
    Eigen::VectorXi pos = Eigen::VectorXi::Constant(n, -1);
    for (Eigen::Index j = 0; j < n; ++j)
      if (!is_slack(j)) {
        pos(j) = static_cast<int>(ncol_.size());
        ncol_.push_back(static_cast<int>(j));
      }
    Eigen::VectorXi rpos = Eigen::VectorXi::Constant(m, -1);
    for (std::size_t k = 0; k < srow_.size(); ++k) rpos(srow_[k]) = static_cast<int>(k);
    for (std::size_t k = 0; k < zrow_.size(); ++k) rpos(zrow_[k]) = static_cast<int>(k);

    sigma_.resize(static_cast<Eigen::Index>(scol_.size()));
    std::vector<Eigen::Triplet<double>> ts, tz;
    for (Eigen::Index j = 0; j < As_.outerSize(); ++j)
      for (SpMat::InnerIterator it(As_, j); it; ++it) {
        const int r = static_cast<int>(it.row());
        if (is_slack(j) && slack_of_row_(r) == j) {
          sigma_(rpos(r)) = it.value();
          continue;
        }
        if (slack_of_row_(r) >= 0)
          ts.emplace_back(rpos(r), pos(j), it.value());
        else
          tz.emplace_back(rpos(r), pos(j), it.value());
      }
    const auto p = static_cast<Eigen::Index>(ncol_.size());
    A_sn_.resize(static_cast<Eigen::Index>(srow_.size()), p);
    A_sn_.setFromTriplets(ts.begin(), ts.end());
    A_zn_.resize(static_cast<Eigen::Index>(zrow_.size()), p);
    A_zn_.setFromTriplets(tz.begin(), tz.end());
  }

  void factor_slack() {
    weight_ = (sigma_.array().square() / rho_ + eps_).inverse().matrix();
    const SpMat WA = weight_.asDiagonal() * A_sn_;
    const SpMat core = A_sn_.transpose() * WA;
    Mat H = Mat(core);
    H.diagonal().array() += rho_;
    h_llt_.compute(H);
    if (h_llt_.info() != Eigen::Success) throw NumericalError("KKT factorization failed");
    if (A_zn_.rows() > 0) {
      Z_ = h_llt_.solve(Mat(A_zn_.transpose()));
      Mat schur = A_zn_ * Z_;
      schur.diagonal().array() += eps_;
      schur_llt_.compute(schur);
      if (schur_llt_.info() != Eigen::Success) throw NumericalError("KKT factorization failed");
    }
  }

  void solve_slack(const Vec& r1, const Vec& r2, Vec& x, Vec& lam) const {
    const auto ns = static_cast<Eigen::Index>(scol_.size());
    const auto nz = static_cast<Eigen::Index>(zrow_.size());
    const auto p = static_cast<Eigen::Index>(ncol_.size());
    Vec r1n(p), r1t(ns), r2s(ns), r2z(nz);
    for (Eigen::Index k = 0; k < p; ++k) r1n(k) = r1(ncol_[static_cast<std::size_t>(k)]);
    for (Eigen::Index k = 0; k < ns; ++k) {
      r1t(k) = r1(scol_[static_cast<std::size_t>(k)]);
      r2s(k) = r2(srow_[static_cast<std::size_t>(k)]);
    }
    for (Eigen::Index k = 0; k < nz; ++k) r2z(k) = r2(zrow_[static_cast<std::size_t>(k)]);

    const Vec cs = sigma_.cwiseProduct(r1t) / rho_ - r2s;
    const Vec rhs = r1n - A_sn_.transpose() * weight_.cwiseProduct(cs);
    Vec xn = h_llt_.solve(rhs);
    Vec lz(nz);
    if (nz > 0) {
      lz = schur_llt_.solve(Vec(A_zn_ * xn - r2z));
      xn -= Z_ * lz;
    }
    const Vec ls = weight_.cwiseProduct(A_sn_ * xn + cs);
    const Vec t = (r1t - sigma_.cwiseProduct(ls)) / rho_;

    x.resize(As_.cols());
    lam.resize(As_.rows());
    for (Eigen::Index k = 0; k < p; ++k) x(ncol_[static_cast<std::size_t>(k)]) = xn(k);
    for (Eigen::Index k = 0; k < ns; ++k) {
      x(scol_[static_cast<std::size_t>(k)]) = t(k);
      lam(srow_[static_cast<std::size_t>(k)]) = ls(k);
    }
    for (Eigen::Index k = 0; k < nz; ++k) lam(zrow_[static_cast<std::size_t>(k)]) = lz(k);
  }

  const SpMat& As_;
  double eps_;
  double rho_ = 1.0;
  Mode mode_ = Mode::sparse;

  Eigen::LLT<Mat> rows_llt_;

  Eigen::VectorXi slack_of_row_;
  std::vector<int> srow_, zrow_, scol_, ncol_;
  Vec sigma_, weight_;
  SpMat A_sn_, A_zn_;
  Eigen::LLT<Mat> h_llt_, schur_llt_;
  Mat Z_;

  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SpMat, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
};

// Type-II Anderson acceleration on the stacked (z, u) iterate. The Gram matrix
// of residual differences is updated one column at a time.
class Anderson {
 public:
  Anderson(Eigen::Index dim, int memory)
      : mem_(memory), dW_(dim, memory), dG_(dim, memory), gram_(Mat::Zero(memory, memory)) {}

  void reset() {
    count_ = 0;
    have_prev_ = false;
  }

  // w: current point, f: its image. Returns false when no extrapolation is available.
  bool step(const Vec& w, const Vec& f, Vec& out) {
    g_ = f - w;
    if (have_prev_) {
      const Eigen::Index slot = count_ % mem_;
      dW_.col(slot) = w - w_prev_;
      dG_.col(slot) = g_ - g_prev_;
      ++count_;
      const Eigen::Index k = std::min(count_, mem_);
      for (Eigen::Index j = 0; j < k; ++j) gram_(slot, j) = gram_(j, slot) = dG_.col(slot).dot(dG_.col(j));
    }
    w_prev_ = w;
    g_prev_ = g_;
    have_prev_ = true;
    const Eigen::Index k = std::min(count_, mem_);
    if (k == 0) return false;
    Mat M = gram_.topLeftCorner(k, k);
    M.diagonal().array() += 1e-10 * (M.trace() + 1e-30);
    const Vec gamma = M.ldlt().solve(dG_.leftCols(k).transpose() * g_);
    if (!gamma.allFinite()) return false;
    out = f - (dW_.leftCols(k) + dG_.leftCols(k)) * gamma;
    return out.allFinite();
  }

 private:
  Eigen::Index mem_;
  Eigen::Index count_ = 0;
  bool have_prev_ = false;
  Mat dW_, dG_, gram_;
  Vec w_prev_, g_prev_, g_;
};

double dist_to_cone(const Vec& v, const ConeLayout& layout, bool dual) {
  Vec p = v;
  project_in_place(p, layout, dual);
  return max_abs(Vec(v - p));
}

}  // namespace

Vec project_cone(const Vec& v, const ConeLayout& layout, bool dual) {
  if (v.size() != layout_dim(layout)) throw DimensionError("project_cone: size mismatch");
  Vec out = v;
  project_in_place(out, layout, dual);
  return out;
}

Mat extract_block(const Vec& flat, const ConeLayout& layout, std::size_t index) {
  const Eigen::Index off = block_offset(layout, index);
  const auto& blk = layout[index];
  if (flat.size() < off + blk.dim()) throw DimensionError("extract_block: vector shorter than layout");
  if (blk.kind == ConeBlock::Kind::psd) return unpack_sym(flat.segment(off, blk.dim()));
  return flat.segment(off, blk.dim());
}

ConicSolution solve_conic(const ConicLP& p, const ConicSettings& settings, const ConicSolution* warm) {
  p.validate();
  if (!(settings.tol > 0.0)) throw Error("solve_conic: tol must be positive");
  using Clock = std::chrono::steady_clock;
  const auto t0 = Clock::now();
  const Eigen::Index n = p.dim();
  const Eigen::Index m = p.A.rows();

  const Scaling sc = equilibrate(p.A, p.b, p.c, p.cones, 25);
  SpMat As = sc.row.asDiagonal() * p.A * sc.col.asDiagonal();
  As.makeCompressed();
  const Vec cs = sc.cost * sc.col.cwiseProduct(p.c);
  const Vec bs = sc.rhs * sc.row.cwiseProduct(p.b);

  double rho = settings.initial_rho;
  Vec z = Vec::Zero(n);
  Vec u = Vec::Zero(n);
  if (warm && warm->x.size() <= n && warm->s.size() == warm->x.size() && warm->rho > 0.0) {
    rho = warm->rho;
    const Eigen::Index k = warm->x.size();
    z.head(k) = sc.rhs * warm->x.cwiseQuotient(sc.col.head(k));
    u.head(k) = -(sc.cost / rho) * warm->s.cwiseProduct(sc.col.head(k));
  }
  z = project_cone(z, p.cones);

  KktSystem kkt(As, 1e-10);
  kkt.factor(rho);

  const double bnorm = max_abs(p.b);
  const double cnorm = max_abs(p.c);
  const double alpha = settings.relaxation;
  const int adapt_interval = 100;
  const int infeas_interval = 200;

  Vec x = Vec::Zero(n), lam = Vec::Zero(m), zprev(n), xhat(n);
  Vec y_mark = Vec::Zero(m), x_mark = Vec::Zero(n);
  bool have_mark = false;
  int last_adapt = 0;

  ConicSolution best;
  double best_score = std::numeric_limits<double>::infinity();
  ConicSolution cur;

  auto evaluate = [&](int iters) {
    cur.x = sc.col.cwiseProduct(z) / sc.rhs;
    cur.y = sc.row.cwiseProduct(-lam) / sc.cost;
    cur.s = (-rho * u).cwiseQuotient(sc.col) / sc.cost;
    const Vec rp = p.A * cur.x - p.b;
    const Vec rd = p.c - p.A.transpose() * cur.y - cur.s;
    cur.primal_objective = p.c.dot(cur.x);
    cur.dual_objective = p.b.dot(cur.y);
    cur.primal_residual = max_abs(rp) / (1.0 + bnorm);
    cur.dual_residual = max_abs(rd) / (1.0 + cnorm);
    cur.gap = std::abs(cur.primal_objective - cur.dual_objective) /
              (1.0 + std::abs(cur.primal_objective) + std::abs(cur.dual_objective));
    cur.iterations = iters;
    cur.rho = rho;
    cur.status = ConicStatus::max_iters;
    const double score = std::max({cur.primal_residual, cur.dual_residual, cur.gap});
    if (!std::isfinite(score)) return false;
    if (score < best_score) {
      best_score = score;
      best = cur;
    }
    return score <= settings.tol;
  };

  const bool use_aa = settings.anderson_memory > 0;
  Anderson aa(2 * n, std::max(settings.anderson_memory, 1));
  Vec w(2 * n), f(2 * n), w_aa(2 * n), f_base(2 * n);
  double res_base = 0.0;
  bool pending = false;

  int it = 0;
  for (; it < settings.max_iters; ++it) {
    if (pending) {
      z = w_aa.head(n);
      u = w_aa.tail(n);
    }
    zprev = z;
    w << z, u;
    kkt.solve(rho * (z - u) - cs, bs, settings.refine_steps, x, lam);
    xhat = alpha * x + (1.0 - alpha) * zprev;
    z = xhat + u;
    project_in_place(z, p.cones, false);
    u += xhat - z;

    if (use_aa) {
      f << z, u;
      const double res = (f - w).norm();
      if (pending && res > res_base) {
        // Extrapolated point made things worse: fall back to the plain step.
        z = f_base.head(n);
        u = f_base.tail(n);
        aa.reset();
        pending = false;
      } else if (aa.step(w, f, w_aa)) {
        f_base = f;
        res_base = res;
        pending = true;
      } else {
        pending = false;
      }
    }

    if ((it + 1) % settings.check_every != 0) continue;

    const bool done = evaluate(it + 1);
    if (done) {
      best = cur;
      best.status = ConicStatus::converged;
      return best;
    }
    if (std::chrono::duration<double>(Clock::now() - t0).count() > settings.time_limit_seconds) break;

    if ((it + 1) % infeas_interval == 0) {
      if (have_mark) {
        // Growth of the iterates along a fixed direction is read as a
        // Farkas-type certificate.
        const Vec dy = cur.y - y_mark;
        const double bdy = p.b.dot(dy);
        if (bdy > 0.0) {
          const Vec yhat = dy / bdy;
          const double dist = dist_to_cone(Vec(-(p.A.transpose() * yhat)), p.cones, true);
          if (dist * (1.0 + cur.x.lpNorm<1>()) < 1e-3) {
            cur.status = ConicStatus::infeasibility_suspected;
            return cur;
          }
        }
        const Vec dx = cur.x - x_mark;
        const double cdx = p.c.dot(dx);
        if (cdx < 0.0) {
          const Vec xdir = dx / -cdx;
          const double resid = std::max(max_abs(Vec(p.A * xdir)), dist_to_cone(xdir, p.cones, false));
          if (resid * (1.0 + cur.y.lpNorm<1>() + cur.s.lpNorm<1>()) < 1e-3) {
            cur.status = ConicStatus::infeasibility_suspected;
            return cur;
          }
        }
      }
      y_mark = cur.y;
      x_mark = cur.x;
      have_mark = true;
    }

    if (settings.adaptive_rho && it + 1 - last_adapt >= adapt_interval) {
      const Vec Az = As * z;
      const double prim = max_abs(Vec(Az - bs)) / std::max({max_abs(bs), max_abs(Az), 1e-12});
      const Vec Atl = As.transpose() * lam;
      const Vec ru = rho * u;
      const double dual = max_abs(Vec(cs + Atl + ru)) / std::max({max_abs(cs), max_abs(Atl), max_abs(ru), 1e-12});
      if (prim > 0.0 && dual > 0.0) {
        const double ratio = std::sqrt(prim / dual);
        if (ratio > 5.0 || ratio < 0.2) {
          const double next = std::clamp(rho * ratio, 1e-6, 1e6);
          u *= rho / next;
          rho = next;
          kkt.factor(rho);
          last_adapt = it + 1;
          aa.reset();
          pending = false;
        }
      }
    }
  }
  if (cur.x.size() == 0 || cur.iterations != it) evaluate(it);
  if (best.x.size() == 0) best = cur;
  best.status = ConicStatus::max_iters;
  best.iterations = it;
  return best;
}

}  // namespace dcqp
