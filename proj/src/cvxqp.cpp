#include "dcqp/cvxqp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace dcqp {

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::optimal: return "optimal";
    case QpStatus::infeasible: return "infeasible";
    case QpStatus::unbounded: return "unbounded";
    case QpStatus::nonconvex: return "nonconvex";
    case QpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Mat gather_rows(const Mat& A, const std::vector<int>& rows) {
  Mat out(static_cast<Eigen::Index>(rows.size()), A.cols());
  for (std::size_t k = 0; k < rows.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = A.row(rows[k]);
  return out;
}

// Greedy independent subset of `rows`, in the given order.
std::vector<int> independent_subset(const Mat& A, std::span<const int> rows) {
  std::vector<int> kept;
  for (int r : rows) {
    std::vector<int> trial = kept;
    trial.push_back(r);
    Eigen::ColPivHouseholderQR<Mat> qr(gather_rows(A, trial).transpose());
    qr.setThreshold(1e-10);
    if (qr.rank() == static_cast<Eigen::Index>(trial.size())) kept = std::move(trial);
  }
  return kept;
}

struct ActiveSetRun {
  Vec x;
  std::vector<int> working;
  Vec mu_working;
  QpStatus status;
  int iterations = 0;
};

// Active-set iteration from a feasible x whose working set rows are tight and
// linearly independent. Pinned rows never leave the working set.
ActiveSetRun run_active_set(const Mat& H, bool linear, const Vec& g, const Mat& A, const Vec& b,
                            const std::vector<char>& pinned, std::vector<int> working, Vec x,
                            double tol, int max_iters) {
  const Eigen::Index n = x.size();
  const Eigen::Index m = A.rows();
  const double hscale = std::max(1.0, max_abs(H));
  const double gscale = 1.0 + max_abs(g) + (linear ? 0.0 : hscale * max_abs(x));
  const double zero_curv = 64.0 * std::numeric_limits<double>::epsilon() * hscale * double(std::max<Eigen::Index>(n, 1));
  const double neg_curv = 1e-7 * hscale;
  const double grad_tol = 1e-13 * gscale;
  const double mult_tol = tol * gscale;

  Vec row_norm(m);
  for (Eigen::Index i = 0; i < m; ++i) row_norm(i) = A.row(i).norm();

  std::vector<char> in_working(static_cast<std::size_t>(m), 0);
  for (int r : working) in_working[static_cast<std::size_t>(r)] = 1;

  ActiveSetRun run;
  run.status = QpStatus::iteration_limit;
  int zero_steps = 0;
  for (int it = 0; it < max_iters; ++it) {
    run.iterations = it + 1;
    const Vec grad = linear ? g : Vec(H * x + g);
    const auto w = static_cast<Eigen::Index>(working.size());
    const Eigen::Index k = n - w;

    Mat AWt;
    Eigen::HouseholderQR<Mat> qr;
    if (w > 0) {
      AWt = gather_rows(A, working).transpose();
      qr.compute(AWt);
    }

    Vec p;
    bool ray = false;
    bool stationary = true;
    if (k > 0) {
      Mat Z;
      if (w == 0) {
        Z = Mat::Identity(n, n);
      } else {
        const Mat Qfull = qr.householderQ();
        Z = Qfull.rightCols(k);
      }
      const Vec gr = Z.transpose() * grad;
      if (linear) {
        if (max_abs(gr) > grad_tol) {
          p = -(Z * gr);
          ray = true;
          stationary = false;
        }
      } else {
        Mat Hr = Z.transpose() * H * Z;
        Hr = 0.5 * (Hr + Hr.transpose()).eval();
        Eigen::SelfAdjointEigenSolver<Mat> es(Hr);
        if (es.info() != Eigen::Success) {
          run.status = QpStatus::nonconvex;
          break;
        }
        const Vec& lam = es.eigenvalues();
        if (lam(0) < -neg_curv) {
          run.status = QpStatus::nonconvex;
          break;
        }
        const Vec coeff = es.eigenvectors().transpose() * gr;
        Vec flat = Vec::Zero(k);
        Vec newton = Vec::Zero(k);
        for (Eigen::Index j = 0; j < k; ++j) {
          if (lam(j) > zero_curv)
            newton(j) = -coeff(j) / lam(j);
          else
            flat(j) = -coeff(j);
        }
        if (max_abs(flat) > grad_tol) {
          p = Z * (es.eigenvectors() * flat);
          ray = true;
          stationary = false;
        } else {
          p = Z * (es.eigenvectors() * newton);
          stationary = max_abs(p) <= 1e-14 * (1.0 + max_abs(x));
        }
      }
    }

    if (!stationary) {
      double alpha = ray ? kInf : 1.0;
      int block = -1;
      const double pnorm = p.norm();
      for (Eigen::Index i = 0; i < m; ++i) {
        if (in_working[static_cast<std::size_t>(i)] || pinned[static_cast<std::size_t>(i)]) continue;
        const double ap = A.row(i).dot(p);
        if (ap <= 1e-12 * row_norm(i) * pnorm) continue;
        const double slack = b(i) - A.row(i).dot(x);
        const double a = std::max(slack, 0.0) / ap;
        if (a < alpha) {
          alpha = a;
          block = static_cast<int>(i);
        }
      }
      if (block < 0 && ray) {
        run.status = QpStatus::unbounded;
        break;
      }
      x += alpha * p;
      if (block >= 0) {
        working.push_back(block);
        in_working[static_cast<std::size_t>(block)] = 1;
      }
      zero_steps = alpha * pnorm <= 1e-14 * (1.0 + max_abs(x)) ? zero_steps + 1 : 0;
      continue;
    }

    if (w == 0) {
      run.mu_working.resize(0);
      run.status = QpStatus::optimal;
      break;
    }
    const Vec mu = qr.solve(Vec(-grad));
    int drop = -1;
    const bool bland = zero_steps >= 3;
    double worst = -mult_tol;
    for (Eigen::Index j = 0; j < w; ++j) {
      const int r = working[static_cast<std::size_t>(j)];
      if (pinned[static_cast<std::size_t>(r)] || mu(j) >= -mult_tol) continue;
      if (bland) {
        if (drop < 0 || r < working[static_cast<std::size_t>(drop)]) drop = static_cast<int>(j);
      } else if (mu(j) < worst) {
        worst = mu(j);
        drop = static_cast<int>(j);
      }
    }
    if (drop < 0) {
      run.mu_working = mu;
      run.status = QpStatus::optimal;
      break;
    }
    in_working[static_cast<std::size_t>(working[static_cast<std::size_t>(drop)])] = 0;
    working.erase(working.begin() + drop);
  }
  run.x = std::move(x);
  run.working = std::move(working);
  return run;
}

double scaled_violation(const Mat& A, const Vec& b, const std::vector<char>& pinned, const Vec& x) {
  double worst = 0.0;
  const Vec r = A * x - b;
  for (Eigen::Index i = 0; i < A.rows(); ++i) {
    const double v = pinned[static_cast<std::size_t>(i)] ? std::abs(r(i)) : r(i);
    worst = std::max(worst, v / (1.0 + std::abs(b(i))));
  }
  return worst;
}

Vec snap_to_pinned(const Mat& A, const Vec& b, std::span<const int> pinned, Vec x) {
  if (pinned.empty()) return x;
  std::vector<int> rows(pinned.begin(), pinned.end());
  const Mat AP = gather_rows(A, rows);
  Vec bP(AP.rows());
  for (std::size_t k = 0; k < rows.size(); ++k) bP(static_cast<Eigen::Index>(k)) = b(rows[k]);
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(AP);
  x -= cod.solve(Vec(AP * x - bP));
  return x;
}

int default_iters(Eigen::Index n, Eigen::Index m) { return static_cast<int>(50 * (n + m) + 100); }

struct PhaseOne {
  std::optional<Vec> x;
  QpStatus status = QpStatus::optimal;
  int iterations = 0;
};

// min t  s.t.  a_i'x - t <= b_i (free rows), |a_i'x - b_i| <= t (pinned rows), t >= 0.
PhaseOne phase_one(const Mat& A, const Vec& b, const std::vector<char>& pinned, const Vec& x0,
                   double tol, int max_iters) {
  const Eigen::Index n = A.cols();
  const Eigen::Index m = A.rows();
  Eigen::Index npin = 0;
  for (char c : pinned) npin += c ? 1 : 0;
  const Eigen::Index rows = m + npin + 1;
  Mat A1 = Mat::Zero(rows, n + 1);
  Vec b1 = Vec::Zero(rows);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < m; ++i) {
    A1.block(r, 0, 1, n) = A.row(i);
    A1(r, n) = -1.0;
    b1(r++) = b(i);
    if (pinned[static_cast<std::size_t>(i)]) {
      A1.block(r, 0, 1, n) = -A.row(i);
      A1(r, n) = -1.0;
      b1(r++) = -b(i);
    }
  }
  A1(r, n) = -1.0;
  Vec start(n + 1);
  start.head(n) = x0;
  const Vec resid = A1.leftCols(n) * x0 - b1;
  start(n) = std::max(0.0, resid.head(rows - 1).size() ? resid.head(rows - 1).maxCoeff() : 0.0);
  Vec g1 = Vec::Zero(n + 1);
  g1(n) = 1.0;
  const std::vector<char> none(static_cast<std::size_t>(rows), 0);
  const Mat H0 = Mat::Zero(0, 0);
  auto run = run_active_set(H0, true, g1, A1, b1, none, {}, start, tol, max_iters);
  PhaseOne out;
  out.iterations = run.iterations;
  out.status = run.status;
  if (run.status != QpStatus::optimal) return out;
  if (run.x(n) > tol * (1.0 + max_abs(b))) {
    out.status = QpStatus::infeasible;
    return out;
  }
  out.x = run.x.head(n);
  return out;
}

}  // namespace

CvxQpResult solve_convex_qp(const Mat& H, const Vec& g, const Mat& A, const Vec& b,
                            std::span<const int> pinned, const CvxQpOptions& opts) {
  const Eigen::Index n = g.size();
  const Eigen::Index m = A.rows();
  if (A.cols() != n || b.size() != m || (H.size() != 0 && (H.rows() != n || H.cols() != n)))
    throw DimensionError("solve_convex_qp: inconsistent dimensions");
  const bool linear = H.size() == 0 || H.isZero(0.0);
  const int max_iters = opts.max_iters > 0 ? opts.max_iters : default_iters(n, m);

  std::vector<char> pinned_mask(static_cast<std::size_t>(m), 0);
  for (int r : pinned) {
    if (r < 0 || r >= m) throw DimensionError("solve_convex_qp: pinned row out of range");
    pinned_mask[static_cast<std::size_t>(r)] = 1;
  }

  CvxQpResult res;
  res.multipliers = Vec::Zero(m);
  Vec x = opts.start ? *opts.start : Vec::Zero(n);
  if (x.size() != n) throw DimensionError("solve_convex_qp: start has wrong size");
  x = snap_to_pinned(A, b, pinned, std::move(x));
  if (scaled_violation(A, b, pinned_mask, x) > opts.tol) {
    auto p1 = phase_one(A, b, pinned_mask, x, opts.tol, max_iters);
    res.iterations += p1.iterations;
    if (!p1.x) {
      res.status = p1.status == QpStatus::optimal ? QpStatus::infeasible : p1.status;
      res.x = x;
      res.kkt_residual = kInf;
      return res;
    }
    x = snap_to_pinned(A, b, pinned, *p1.x);
  }

  const std::vector<int> working = independent_subset(A, pinned);
  auto run = run_active_set(H, linear, g, A, b, pinned_mask, working, std::move(x), opts.tol, max_iters);
  res.iterations += run.iterations;
  res.status = run.status;
  res.x = std::move(run.x);
  res.working_set = run.working;
  if (run.mu_working.size() == static_cast<Eigen::Index>(run.working.size())) {
    for (std::size_t j = 0; j < run.working.size(); ++j) {
      const int r = run.working[j];
      double mu = run.mu_working(static_cast<Eigen::Index>(j));
      if (!pinned_mask[static_cast<std::size_t>(r)] && mu < 0.0) mu = 0.0;
      res.multipliers(r) = mu;
    }
  }

  const Vec Hx = linear ? Vec::Zero(n) : Vec(H * res.x);
  res.objective = 0.5 * res.x.dot(Hx) + g.dot(res.x);
  const Vec slack = b - A * res.x;
  double feas = 0.0;
  double comp = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    feas = std::max(feas, pinned_mask[static_cast<std::size_t>(i)] ? std::abs(slack(i)) : -slack(i));
    comp = std::max(comp, std::abs(res.multipliers(i) * slack(i)));
  }
  const double stat = max_abs(Vec(Hx + g + A.transpose() * res.multipliers));
  res.kkt_residual = std::max({stat, feas, comp});
  return res;
}

CvxQpResult solve_lp(const Vec& g, const Mat& A, const Vec& b, std::span<const int> pinned,
                     const CvxQpOptions& opts) {
  return solve_convex_qp(Mat(0, 0), g, A, b, pinned, opts);
}

std::optional<Vec> feasible_point(const Mat& A, const Vec& b, std::span<const int> pinned, double tol,
                                  const Vec* guess) {
  const Eigen::Index n = A.cols();
  std::vector<char> mask(static_cast<std::size_t>(A.rows()), 0);
  for (int r : pinned) mask[static_cast<std::size_t>(r)] = 1;
  Vec x = guess ? *guess : Vec::Zero(n);
  x = snap_to_pinned(A, b, pinned, std::move(x));
  if (scaled_violation(A, b, mask, x) <= tol) return x;
  auto p1 = phase_one(A, b, mask, x, tol, default_iters(n, A.rows()));
  return p1.x;
}

Vec project_onto_polytope(const Vec& z, const Mat& A, const Vec& b) {
  const Eigen::Index n = z.size();
  CvxQpOptions opts;
  opts.start = &z;
  auto res = solve_convex_qp(Mat::Identity(n, n), -z, A, b, {}, opts);
  if (!res.ok()) throw NumericalError(std::string("projection onto polytope failed: ") + to_string(res.status));
  return res.x;
}

}  // namespace dcqp
