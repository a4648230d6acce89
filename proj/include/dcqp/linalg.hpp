#pragma once

// Dense symmetric kernels shared by the solver modules. Everything here is a
// free function over Eigen expressions so callers can pass blocks and views.

#include <Eigen/Dense>

#include <cmath>
#include <limits>

#include "dcqp/error.hpp"

namespace dcqp {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

template <typename Scalar>
using DenseMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using DenseVec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
struct SymEig {
  DenseVec<Scalar> values;   // ascending
  DenseMat<Scalar> vectors;  // orthonormal columns, paired with values
};

template <typename Derived>
SymEig<typename Derived::Scalar> sym_eig(const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  if (S.rows() != S.cols()) throw DimensionError("sym_eig: matrix is not square");
  if (S.rows() == 0) return {DenseVec<Scalar>(0), DenseMat<Scalar>(0, 0)};
  if (!S.allFinite()) throw NumericalError("sym_eig: non-finite entry");
  Eigen::SelfAdjointEigenSolver<DenseMat<Scalar>> es(S.eval());
  if (es.info() != Eigen::Success) throw NumericalError("sym_eig: eigensolver did not converge");
  return {es.eigenvalues(), es.eigenvectors()};
}

template <typename Derived>
typename Derived::Scalar lambda_min(const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  if (S.rows() == 0) return std::numeric_limits<Scalar>::infinity();
  if (!S.allFinite()) throw NumericalError("lambda_min: non-finite entry");
  Eigen::SelfAdjointEigenSolver<DenseMat<Scalar>> es(S.eval(), Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("lambda_min: eigensolver did not converge");
  return es.eigenvalues()(0);
}

// Keeps the part of the spectrum above (sign = +1) or below (sign = -1) zero,
// returned with nonnegative eigenvalues in both cases.
template <typename Derived>
DenseMat<typename Derived::Scalar> spectral_part(const Eigen::MatrixBase<Derived>& S, int sign) {
  using Scalar = typename Derived::Scalar;
  const auto eig = sym_eig(S);
  const DenseVec<Scalar> kept = (Scalar(sign) * eig.values).cwiseMax(Scalar(0));
  DenseMat<Scalar> out = eig.vectors * kept.asDiagonal() * eig.vectors.transpose();
  return Scalar(0.5) * (out + out.transpose());
}

template <typename Derived>
DenseMat<typename Derived::Scalar> psd_project(const Eigen::MatrixBase<Derived>& S) {
  return spectral_part(S, +1);
}

// Orthonormal basis of {z : A z = 0}. Singular values at or below
// rel_tol * sigma_max count as zero.
template <typename Derived>
DenseMat<typename Derived::Scalar> nullspace_basis(const Eigen::MatrixBase<Derived>& A,
                                                   typename Derived::Scalar rel_tol = 1e-10) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index n = A.cols();
  if (A.rows() == 0) return DenseMat<Scalar>::Identity(n, n);
  if (n == 0) return DenseMat<Scalar>(0, 0);
  Eigen::JacobiSVD<DenseMat<Scalar>> svd(A.eval(), Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const Scalar cutoff = rel_tol * (sv.size() > 0 ? sv(0) : Scalar(0));
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > cutoff && sv(i) > Scalar(0)) ++rank;
  return svd.matrixV().rightCols(n - rank);
}

template <typename Scalar>
struct ReducedHessian {
  DenseMat<Scalar> matrix;
  Scalar lambda_min;  // +inf for an empty basis
};

template <typename DerivedQ, typename DerivedZ>
ReducedHessian<typename DerivedQ::Scalar> reduced_hessian(const Eigen::MatrixBase<DerivedQ>& Q,
                                                          const Eigen::MatrixBase<DerivedZ>& Z) {
  using Scalar = typename DerivedQ::Scalar;
  DenseMat<Scalar> R = Z.transpose() * Q * Z;
  R = Scalar(0.5) * (R + R.transpose()).eval();
  const Scalar lmin = lambda_min(R);
  return {std::move(R), lmin};
}

// Packed symmetric storage: upper triangle, column by column, off-diagonal
// entries scaled by sqrt(2) so the Euclidean inner product of packed vectors
// equals the Frobenius inner product of the matrices.
constexpr Eigen::Index packed_size(Eigen::Index side) { return side * (side + 1) / 2; }

constexpr Eigen::Index packed_index(Eigen::Index i, Eigen::Index j) {
  return i <= j ? j * (j + 1) / 2 + i : i * (i + 1) / 2 + j;
}

inline Eigen::Index packed_side(Eigen::Index len) {
  const auto side = static_cast<Eigen::Index>(std::llround((std::sqrt(8.0 * double(len) + 1.0) - 1.0) / 2.0));
  if (packed_size(side) != len) throw DimensionError("packed length is not triangular");
  return side;
}

template <typename Derived>
DenseVec<typename Derived::Scalar> pack_sym(const Eigen::MatrixBase<Derived>& S) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index s = S.rows();
  const Scalar r2 = std::sqrt(Scalar(2));
  DenseVec<Scalar> v(packed_size(s));
  for (Eigen::Index j = 0; j < s; ++j)
    for (Eigen::Index i = 0; i <= j; ++i)
      v(packed_index(i, j)) = i == j ? S(i, i) : r2 * Scalar(0.5) * (S(i, j) + S(j, i));
  return v;
}

template <typename Derived>
DenseMat<typename Derived::Scalar> unpack_sym(const Eigen::MatrixBase<Derived>& v) {
  using Scalar = typename Derived::Scalar;
  const Eigen::Index s = packed_side(v.size());
  const Scalar inv_r2 = Scalar(1) / std::sqrt(Scalar(2));
  DenseMat<Scalar> S(s, s);
  for (Eigen::Index j = 0; j < s; ++j)
    for (Eigen::Index i = 0; i <= j; ++i) {
      const Scalar val = i == j ? v(packed_index(i, j)) : inv_r2 * v(packed_index(i, j));
      S(i, j) = val;
      S(j, i) = val;
    }
  return S;
}

template <typename Derived>
typename Derived::Scalar max_abs(const Eigen::MatrixBase<Derived>& M) {
  return M.size() ? M.cwiseAbs().maxCoeff() : typename Derived::Scalar(0);
}

}  // namespace dcqp
