#include "tacmap/geometry.hpp"

#include <cmath>
#include <stdexcept>

namespace tacmap {

namespace {
constexpr double kRepairThreshold = 1e-7;
constexpr double kRejectThreshold = 1e-3;
}  // namespace

PoseSE3::PoseSE3(const Eigen::Matrix3d& rotation, const Eigen::Vector3d& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation_.allFinite() || !translation_.allFinite()) {
    throw std::invalid_argument("PoseSE3: non-finite input");
  }
  double residual = rotation_residual(rotation_);
  if (residual > kRejectThreshold || rotation_.determinant() < 0.0) {
    throw std::invalid_argument("PoseSE3: matrix is not a rotation");
  }
  if (residual > kRepairThreshold) {
    rotation_ = nearest_rotation(rotation_);
  }
}

PoseSE3 PoseSE3::from_matrix(const Eigen::Matrix4d& m) {
  return PoseSE3(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Eigen::Matrix4d PoseSE3::matrix() const {
  Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

PoseSE3 compose(const PoseSE3& a, const PoseSE3& b) {
  return PoseSE3(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

PoseSE3 inverse(const PoseSE3& p) {
  Eigen::Matrix3d rt = p.rotation().transpose();
  return PoseSE3(rt, -(rt * p.translation()));
}

double rotation_residual(const Eigen::Matrix3d& r) {
  Eigen::Matrix3d e = r * r.transpose() - Eigen::Matrix3d::Identity();
  return e.cwiseAbs().maxCoeff();
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& m) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d u = svd.matrixU();
  Eigen::Matrix3d v = svd.matrixV();
  Eigen::Matrix3d r = u * v.transpose();
  if (r.determinant() < 0.0) {
    u.col(2) *= -1.0;
    r = u * v.transpose();
  }
  return r;
}

Eigen::Matrix3d skew(const Eigen::Vector3d& v) {
  Eigen::Matrix3d s;
  s << 0.0, -v.z(), v.y(), v.z(), 0.0, -v.x(), -v.y(), v.x(), 0.0;
  return s;
}

Eigen::Matrix3d so3_exp(const Eigen::Vector3d& w) {
  double theta = w.norm();
  Eigen::Matrix3d wx = skew(w);
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() + wx + 0.5 * wx * wx;
  }
  double a = std::sin(theta) / theta;
  double b = (1.0 - std::cos(theta)) / (theta * theta);
  return Eigen::Matrix3d::Identity() + a * wx + b * wx * wx;
}

Eigen::Vector3d so3_log(const Eigen::Matrix3d& r) {
  Eigen::Vector3d v(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
  double sin_theta = 0.5 * v.norm();
  double cos_theta = 0.5 * (r.trace() - 1.0);
  cos_theta = std::min(1.0, std::max(-1.0, cos_theta));
  double theta = std::atan2(sin_theta, cos_theta);

  if (sin_theta > 1e-7) {
    return (0.5 * theta / sin_theta) * v;
  }
  if (cos_theta > 0.0) {
    // theta near 0: log(R) ~ vee(R - R^T)/2 to second order.
    return 0.5 * v;
  }
  // theta near pi: recover the axis from the diagonal, signs from symmetric
  // off-diagonals anchored at the largest axis component.
  Eigen::Vector3d axis;
  for (int i = 0; i < 3; ++i) {
    axis[i] = std::sqrt(std::max(0.0, (r(i, i) - cos_theta) / (1.0 - cos_theta)));
  }
  int k = 0;
  if (axis[1] > axis[k]) k = 1;
  if (axis[2] > axis[k]) k = 2;
  for (int i = 0; i < 3; ++i) {
    if (i == k) continue;
    double sym = r(k, i) + r(i, k);
    if (sym < 0.0) axis[i] = -axis[i];
  }
  // Resolve overall sign with vee(R - R^T), which vanishes only exactly at pi.
  if (v.dot(axis) < 0.0) axis = -axis;
  return theta * axis.normalized();
}

Eigen::Matrix3d so3_left_jacobian(const Eigen::Vector3d& w) {
  double theta = w.norm();
  Eigen::Matrix3d wx = skew(w);
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() + 0.5 * wx + wx * wx / 6.0;
  }
  double t2 = theta * theta;
  double a = (1.0 - std::cos(theta)) / t2;
  double b = (theta - std::sin(theta)) / (t2 * theta);
  return Eigen::Matrix3d::Identity() + a * wx + b * wx * wx;
}

Eigen::Matrix3d so3_left_jacobian_inverse(const Eigen::Vector3d& w) {
  double theta = w.norm();
  Eigen::Matrix3d wx = skew(w);
  if (theta < 1e-8) {
    return Eigen::Matrix3d::Identity() - 0.5 * wx + wx * wx / 12.0;
  }
  double c = 1.0 / (theta * theta) -
             (1.0 + std::cos(theta)) / (2.0 * theta * std::sin(theta));
  return Eigen::Matrix3d::Identity() - 0.5 * wx + c * wx * wx;
}

PoseSE3 se3_exp(const Vector6d& xi) {
  Eigen::Vector3d w = xi.head<3>();
  Eigen::Vector3d rho = xi.tail<3>();
  return PoseSE3(so3_exp(w), so3_left_jacobian(w) * rho);
}

Vector6d se3_log(const PoseSE3& t) {
  Eigen::Vector3d w = so3_log(t.rotation());
  Eigen::Vector3d rho = so3_left_jacobian_inverse(w) * t.translation();
  Vector6d xi;
  xi << w, rho;
  return xi;
}

Matrix6d se3_adjoint(const PoseSE3& t) {
  Matrix6d ad = Matrix6d::Zero();
  ad.topLeftCorner<3, 3>() = t.rotation();
  ad.bottomRightCorner<3, 3>() = t.rotation();
  ad.bottomLeftCorner<3, 3>() = skew(t.translation()) * t.rotation();
  return ad;
}

namespace {

// Coupling block of the left Jacobian of se(3) (rotation-first ordering).
Eigen::Matrix3d se3_q_matrix(const Eigen::Vector3d& w, const Eigen::Vector3d& rho) {
  Eigen::Matrix3d wx = skew(w);
  Eigen::Matrix3d rx = skew(rho);
  double theta = w.norm();
  double c1;  // (theta - sin) / theta^3
  double c2;  // (1 - theta^2/2 - cos) / theta^4
  double c3;  // (theta - sin - theta^3/6) / theta^5
  if (theta < 1e-4) {
    double t2 = theta * theta;
    c1 = 1.0 / 6.0 - t2 / 120.0;
    c2 = 1.0 / 24.0 - t2 / 720.0;
    c3 = -1.0 / 120.0 + t2 / 5040.0;
  } else {
    double t2 = theta * theta;
    double t3 = t2 * theta;
    c1 = (theta - std::sin(theta)) / t3;
    c2 = (1.0 - 0.5 * t2 - std::cos(theta)) / (t2 * t2);
    c3 = (theta - std::sin(theta) - t3 / 6.0) / (t2 * t3);
  }
  Eigen::Matrix3d wr = wx * rx;
  Eigen::Matrix3d rw = rx * wx;
  Eigen::Matrix3d wrw = wr * wx;
  return 0.5 * rx + c1 * (wr + rw + wrw) - c2 * (wx * wr + rw * wx - 3.0 * wrw) -
         0.5 * (c2 - 3.0 * c3) * (wrw * wx + wx * wrw);
}

Matrix6d se3_left_jacobian_inverse(const Vector6d& xi) {
  Eigen::Vector3d w = xi.head<3>();
  Eigen::Vector3d rho = xi.tail<3>();
  Eigen::Matrix3d jinv = so3_left_jacobian_inverse(w);
  Eigen::Matrix3d q = se3_q_matrix(w, rho);
  Matrix6d out = Matrix6d::Zero();
  out.topLeftCorner<3, 3>() = jinv;
  out.bottomRightCorner<3, 3>() = jinv;
  out.bottomLeftCorner<3, 3>() = -jinv * q * jinv;
  return out;
}

}  // namespace

Matrix6d se3_right_jacobian_inverse(const Vector6d& xi) {
  return se3_left_jacobian_inverse(-xi);
}

}  // namespace tacmap
