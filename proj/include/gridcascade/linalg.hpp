#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "gridcascade/errors.hpp"

namespace gridcascade {

inline constexpr double kDefaultRankTol = 1e-10;

/// Moore-Penrose pseudoinverse via SVD. Singular values below rank_tol times the largest one are
/// treated as zero. Returns a cols x rows matrix.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> pinv(const Eigen::MatrixBase<Derived>& mat,
                                                                             double rank_tol = kDefaultRankTol) {
  using Scalar = typename Derived::Scalar;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Real = typename Eigen::NumTraits<Scalar>::Real;

  if (!(rank_tol > 0.0)) throw std::invalid_argument("pinv: rank_tol must be positive");
  if (!mat.allFinite()) throw NumericError("pinv: matrix has non-finite entries");
  if (mat.size() == 0) return Matrix::Zero(mat.cols(), mat.rows());

  Eigen::BDCSVD<Matrix> svd(mat.derived(), Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& sv = svd.singularValues();
  const Real cutoff = static_cast<Real>(rank_tol) * (sv.size() > 0 ? sv(0) : Real(0));

  Eigen::Matrix<Real, Eigen::Dynamic, 1> inv(sv.size());
  for (Eigen::Index i = 0; i < sv.size(); ++i) inv(i) = (sv(i) > cutoff && sv(i) > Real(0)) ? Real(1) / sv(i) : Real(0);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().adjoint();
}

/// sqrt(mean((x - y)^2)).
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar rmse(const Eigen::MatrixBase<DerivedA>& x, const Eigen::MatrixBase<DerivedB>& y) {
  if (x.size() != y.size())
    throw DimensionError("rmse: length mismatch " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  if (x.size() == 0) return typename DerivedA::Scalar(0);
  using std::sqrt;
  return sqrt((x - y).squaredNorm() / static_cast<typename DerivedA::Scalar>(x.size()));
}

}  // namespace gridcascade
