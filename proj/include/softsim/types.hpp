#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SparseCore>

#include <stdexcept>
#include <string>

namespace softsim {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using VecX = Eigen::VectorXd;
using MatX = Eigen::MatrixXd;
using Mat9 = Eigen::Matrix<double, 9, 9>;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using SparseMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// Library error. The `code` field follows the CLI exit-code contract so
// front ends can forward it unchanged.
class Error : public std::runtime_error {
 public:
  enum class Kind { kInput = 2, kMismatch = 3, kDomain = 4, kNumerical = 5 };

  Error(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}

  Kind kind() const { return kind_; }
  int code() const { return static_cast<int>(kind_); }

 private:
  Kind kind_;
};

inline Error InputError(const std::string& what) { return Error(Error::Kind::kInput, what); }
inline Error MismatchError(const std::string& what) { return Error(Error::Kind::kMismatch, what); }
inline Error DomainError(const std::string& what) { return Error(Error::Kind::kDomain, what); }
inline Error NumericalError(const std::string& what) { return Error(Error::Kind::kNumerical, what); }

// Row-major flattening of a 3x3 matrix: k = 3 * row + col.
inline Vec9 FlattenRowMajor(const Mat3& m) {
  Vec9 v;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) v(3 * a + b) = m(a, b);
  return v;
}

inline Mat3 UnflattenRowMajor(const Vec9& v) {
  Mat3 m;
  for (int a = 0; a < 3; ++a)
    for (int b = 0; b < 3; ++b) m(a, b) = v(3 * a + b);
  return m;
}

inline Vec3 VertexOf(const VecX& x, int v) { return x.segment<3>(3 * v); }

}  // namespace softsim
