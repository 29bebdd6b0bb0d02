#pragma once

#include <Eigen/Dense>

namespace tacmap {

using Vector6d = Eigen::Matrix<double, 6, 1>;
using Matrix6d = Eigen::Matrix<double, 6, 6>;

// Rigid transform (rotation matrix + translation), millimeters.
//
// The rotation is validated at construction: small orthogonality drift
// (residual above 1e-7) is repaired by polar projection, anything worse than
// 1e-3 or an improper rotation throws. Long compose chains therefore stay
// orthonormal without paying for a projection on every product.
class PoseSE3 {
 public:
  PoseSE3() : rotation_(Eigen::Matrix3d::Identity()), translation_(Eigen::Vector3d::Zero()) {}
  PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation);

  static PoseSE3 identity() { return PoseSE3(); }
  static PoseSE3 from_matrix(const Eigen::Matrix4d& m);

  const Eigen::Matrix3d& rotation() const { return rotation_; }
  const Eigen::Vector3d& translation() const { return translation_; }
  Eigen::Matrix4d matrix() const;

  Eigen::Vector3d apply(const Eigen::Vector3d& p) const { return rotation_ * p + translation_; }

 private:
  Eigen::Matrix3d rotation_;
  Eigen::Vector3d translation_;
};

// compose(a, b) is the matrix product a * b: b is applied first, then a,
// so compose(a, b).apply(x) == a.apply(b.apply(x)).
PoseSE3 compose(const PoseSE3& a, const PoseSE3& b);
PoseSE3 inverse(const PoseSE3& p);

// Max-abs entry of R * R^T - I.
double rotation_residual(const Eigen::Matrix3d& r);
// Nearest rotation in Frobenius norm (polar projection via SVD).
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m);

Eigen::Matrix3d skew(const Eigen::Vector3d& v);

// so(3)/se(3) maps. Tangent vectors order rotation first: (wx, wy, wz, tx, ty, tz).
Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w);
Eigen::Vector3d so3_log(const Eigen::Matrix3d& r);
Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w);
Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& w);

PoseSE3 se3_exp(const Vector6d& xi);
Vector6d se3_log(const PoseSE3& t);
Matrix6d se3_adjoint(const PoseSE3& t);

// Inverse right Jacobian of se(3); maps a right-increment of the group
// argument to the increment of log. Validated against finite differences.
Matrix6d se3_right_jacobian_inverse(const Vector6d& xi);

}  // namespace tacmap
