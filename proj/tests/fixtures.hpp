#pragma once

// Shared instances for the unit, property and acceptance tests.

#include <cstdint>
#include <random>
#include <string>

#include "dcqp/instance.hpp"

namespace dcqp::fixtures {

inline QpInstance dense_instance(const std::string& name, Mat Q, Vec d, Mat A, Vec b, double offset = 0.0) {
  QpInstance q;
  q.name = name;
  q.Q = std::move(Q);
  q.d = std::move(d);
  q.offset = offset;
  q.A_ineq = std::move(A);
  q.b_ineq = std::move(b);
  q.A_eq.resize(0, q.d.size());
  q.b_eq.resize(0);
  q.validate_and_symmetrize();
  return q;
}

inline QpInstance with_unit_box(QpInstance q) {
  q.lower = Vec::Zero(q.n());
  q.upper = Vec::Ones(q.n());
  return q;
}

// x2^2 + x1 x2 - x2 - x1/2 + 1/4 over {x >= 0, x1 + x2 <= 1}; global value -1/4 at (1, 0),
// while (0, 1/2) is a KKT point that is not a local minimizer.
inline QpInstance remark_qp() {
  Mat Q(2, 2);
  Q << 0.0, 0.5, 0.5, 1.0;
  Mat A(3, 2);
  A << -1, 0, 0, -1, 1, 1;
  return dense_instance("remark", Q, Vec{{-0.25, -0.5}}, A, Vec{{0.0, 0.0, 1.0}}, 0.25);
}

// -|x|^2 over the unit box; global value -n at the all-ones vertex.
inline QpInstance concave_box(Eigen::Index n) {
  QpInstance q = dense_instance("concave_box", -Mat::Identity(n, n), Vec::Zero(n), Mat(0, n), Vec(0));
  return with_unit_box(std::move(q));
}

// |x|^2 over the unit box; global value 0 at the origin.
inline QpInstance convex_box(Eigen::Index n) {
  QpInstance q = dense_instance("convex_box", Mat::Identity(n, n), Vec::Zero(n), Mat(0, n), Vec(0));
  return with_unit_box(std::move(q));
}

// Horn matrix on the standard simplex with a small linear tilt. Copositive but
// not PSD + nonnegative, so the DNN bound has a gap and cuts are required.
inline QpInstance horn_qp() {
  Mat H(5, 5);
  H << 1, -1, 1, 1, -1,
      -1, 1, -1, 1, 1,
      1, -1, 1, -1, 1,
      1, 1, -1, 1, -1,
      -1, 1, 1, -1, 1;
  Mat A = Mat::Ones(1, 5);
  QpInstance q = dense_instance("horn", H, Vec{{0.01, -0.02, 0.015, -0.01, 0.005}}, A, Vec::Ones(1));
  q.lower = Vec::Zero(5);
  return q;
}

inline ReducedInstance horn_simplex() { return reduce(horn_qp()); }

// n in {2, 3}; unit box plus up to 8 - 2n random rows through a strict
// interior point, so at most 8 rows; Q has a clearly negative eigenvalue.
inline ReducedInstance small_fuzz(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 7919 + 17);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index n = 2 + static_cast<Eigen::Index>(rng() % 2);
  Mat Q(n, n);
  do {
    Mat B(n, n);
    for (auto& v : B.reshaped()) v = normal(rng);
    Q = 0.5 * (B + B.transpose());
  } while (lambda_min(Q) > -0.1);
  Vec d(n);
  for (auto& v : d) v = normal(rng);
  const Eigen::Index extra = static_cast<Eigen::Index>(rng() % (8 - 2 * n + 1));
  Vec interior(n);
  for (auto& v : interior) v = 0.2 + 0.6 * unit(rng);
  Mat A(extra, n);
  Vec b(extra);
  for (Eigen::Index i = 0; i < extra; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = normal(rng);
    b(i) = A.row(i).dot(interior) + 0.05 + 0.5 * unit(rng);
  }
  QpInstance q = with_unit_box(dense_instance("fuzz" + std::to_string(seed), Q, d, A, b));
  return reduce(q);
}

// n <= 8 and at most 20 rows: unit box plus random rows.
inline ReducedInstance gmc_fuzz(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 104729 + 3);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 8);
  Mat B(n, n);
  for (auto& v : B.reshaped()) v = normal(rng);
  const Mat Q = 0.5 * (B + B.transpose());
  Vec d(n);
  for (auto& v : d) v = normal(rng);
  const Eigen::Index extra = static_cast<Eigen::Index>(rng() % (20 - 2 * n + 1));
  Vec interior(n);
  for (auto& v : interior) v = 0.2 + 0.6 * unit(rng);
  Mat A(extra, n);
  Vec b(extra);
  for (Eigen::Index i = 0; i < extra; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = normal(rng);
    b(i) = A.row(i).dot(interior) + 0.5 * unit(rng);
  }
  return reduce(with_unit_box(dense_instance("gmc" + std::to_string(seed), Q, d, A, b)));
}

// Strictly convex objective over {x >= -1, 1'x <= n} cut by two random rows.
inline ReducedInstance convex_fuzz(std::uint64_t seed) {
  std::mt19937_64 rng(seed * 15485863 + 11);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng() % 10);
  Mat B(n, n);
  for (auto& v : B.reshaped()) v = normal(rng);
  const Mat Q = B * B.transpose() + 0.1 * Mat::Identity(n, n);
  Vec d(n);
  for (auto& v : d) v = 3.0 * normal(rng);
  Mat A(n + 3, n);
  Vec b(n + 3);
  A.topRows(n) = -Mat::Identity(n, n);
  b.head(n).setOnes();
  A.row(n).setOnes();
  b(n) = double(n);
  for (Eigen::Index i = n + 1; i < n + 3; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) A(i, j) = normal(rng);
    b(i) = 0.1 + unit(rng);  // the origin stays strictly inside
  }
  ReducedInstance r;
  r.name = "cvx" + std::to_string(seed);
  r.Q = Q;
  r.d = d;
  r.A = A;
  r.b = b;
  r.provenance.assign(static_cast<std::size_t>(n + 3), RowTag{});
  r.radius = radius_bound(A, b);
  return r;
}

}  // namespace dcqp::fixtures
