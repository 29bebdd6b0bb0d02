#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "tacmap/cloud.hpp"
#include "tacmap/geometry.hpp"
#include "tacmap/rng.hpp"

using namespace tacmap;

namespace {

Eigen::Matrix3d rot_z(double deg) {
  double rad = deg * M_PI / 180.0;
  Eigen::Matrix3d r;
  r << std::cos(rad), -std::sin(rad), 0, std::sin(rad), std::cos(rad), 0, 0, 0, 1;
  return r;
}

PoseSE3 random_pose(Rng& rng, double max_angle = 2.5, double max_trans = 10.0) {
  Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
  axis.normalize();
  double angle = rng.uniform(-max_angle, max_angle);
  Eigen::Vector3d t(rng.uniform(-max_trans, max_trans), rng.uniform(-max_trans, max_trans),
                    rng.uniform(-max_trans, max_trans));
  return PoseSE3(so3_exp(axis * angle), t);
}

double pose_diff(const PoseSE3& a, const PoseSE3& b) {
  double dr = (a.rotation() - b.rotation()).cwiseAbs().maxCoeff();
  double dt = (a.translation() - b.translation()).cwiseAbs().maxCoeff();
  return std::max(dr, dt);
}

}  // namespace

TEST_CASE("compose identity and inverse round trips") {
  Rng rng(11);
  PoseSE3 t = random_pose(rng);
  CHECK(pose_diff(compose(PoseSE3::identity(), t), t) < 1e-12);
  CHECK(pose_diff(compose(t, PoseSE3::identity()), t) < 1e-12);
  CHECK(pose_diff(compose(t, inverse(t)), PoseSE3::identity()) < 1e-9);
  CHECK(pose_diff(compose(inverse(t), t), PoseSE3::identity()) < 1e-9);
}

TEST_CASE("rotation composition matches analytic rotation sum") {
  PoseSE3 a(rot_z(30.0), Eigen::Vector3d::Zero());
  PoseSE3 b(rot_z(60.0), Eigen::Vector3d::Zero());
  PoseSE3 expected(rot_z(90.0), Eigen::Vector3d::Zero());
  CHECK(pose_diff(compose(a, b), expected) < 1e-12);
}

TEST_CASE("inverse of identity and pure translation") {
  CHECK(pose_diff(inverse(PoseSE3::identity()), PoseSE3::identity()) < 1e-15);
  PoseSE3 t(Eigen::Matrix3d::Identity(), Eigen::Vector3d(1, 2, 3));
  PoseSE3 expected(Eigen::Matrix3d::Identity(), Eigen::Vector3d(-1, -2, -3));
  CHECK(pose_diff(inverse(t), expected) < 1e-15);
}

TEST_CASE("inverse of rotation plus translation checked by compose") {
  PoseSE3 t(rot_z(45.0), Eigen::Vector3d(2, -1, 0.5));
  CHECK(pose_diff(compose(t, inverse(t)), PoseSE3::identity()) < 1e-9);
}

TEST_CASE("composition is associative") {
  Rng rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    PoseSE3 a = random_pose(rng), b = random_pose(rng), c = random_pose(rng);
    CHECK(pose_diff(compose(compose(a, b), c), compose(a, compose(b, c))) < 1e-9);
  }
}

TEST_CASE("rotations stay orthonormal over long compose chains") {
  Rng rng(13);
  PoseSE3 acc;
  for (int i = 0; i < 1000; ++i) acc = compose(acc, random_pose(rng));
  CHECK(rotation_residual(acc.rotation()) < 1e-9);
  CHECK(std::abs(acc.rotation().determinant() - 1.0) < 1e-9);
}

TEST_CASE("constructor rejects non-rotations and repairs drift") {
  Eigen::Matrix3d bad = Eigen::Matrix3d::Identity();
  bad(0, 0) = 2.0;
  CHECK_THROWS(PoseSE3(bad, Eigen::Vector3d::Zero()));

  Eigen::Matrix3d reflect = Eigen::Matrix3d::Identity();
  reflect(2, 2) = -1.0;
  CHECK_THROWS(PoseSE3(reflect, Eigen::Vector3d::Zero()));

  Eigen::Matrix3d drift = rot_z(20.0);
  drift(0, 1) += 5e-6;  // above repair threshold, below reject threshold
  PoseSE3 repaired(drift, Eigen::Vector3d::Zero());
  CHECK(rotation_residual(repaired.rotation()) < 1e-12);
}

TEST_CASE("transform_map identity, translation, and centroid oracle") {
  LocalTactileMap m;
  Rng rng(3);
  for (int i = 0; i < 200; ++i) {
    m.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-1, 1));
  }
  LocalTactileMap same = transform_map(m, PoseSE3::identity());
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    CHECK((same.points[i] - m.points[i]).norm() == doctest::Approx(0.0));
  }

  PoseSE3 shift(Eigen::Matrix3d::Identity(), Eigen::Vector3d(5, 0, 0));
  LocalTactileMap moved = transform_map(m, shift);
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    CHECK(moved.points[i].x() == doctest::Approx(m.points[i].x() + 5.0));
    CHECK(moved.points[i].y() == doctest::Approx(m.points[i].y()));
  }

  PoseSE3 t = random_pose(rng);
  LocalTactileMap mapped = transform_map(m, t);
  Eigen::Vector3d expected = t.rotation() * centroid(m) + t.translation();
  CHECK((centroid(mapped) - expected).norm() < 1e-9);
}

TEST_CASE("transform_map preserves pairwise distances") {
  Rng rng(5);
  LocalTactileMap m;
  for (int i = 0; i < 60; ++i) {
    m.points.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-1, 1));
  }
  PoseSE3 t = random_pose(rng);
  LocalTactileMap mapped = transform_map(m, t);
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    for (std::size_t j = i + 1; j < m.points.size(); ++j) {
      double before = (m.points[i] - m.points[j]).norm();
      double after = (mapped.points[i] - mapped.points[j]).norm();
      CHECK(std::abs(before - after) < 1e-9);
    }
  }
}

TEST_CASE("se3 exp/log round trip") {
  Rng rng(17);
  for (int trial = 0; trial < 100; ++trial) {
    // log is the principal value, so sample rotations with angle below pi.
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    Vector6d xi;
    xi.head<3>() = axis * rng.uniform(-3.0, 3.0);
    for (int i = 3; i < 6; ++i) xi[i] = rng.uniform(-10, 10);
    Vector6d back = se3_log(se3_exp(xi));
    CHECK((back - xi).cwiseAbs().maxCoeff() < 1e-9);
  }
  // Outside the principal domain exp(log(T)) must still reproduce T.
  for (int trial = 0; trial < 30; ++trial) {
    Vector6d xi;
    for (int i = 0; i < 3; ++i) xi[i] = rng.uniform(-4.0, 4.0);
    for (int i = 3; i < 6; ++i) xi[i] = rng.uniform(-10, 10);
    PoseSE3 t = se3_exp(xi);
    PoseSE3 back = se3_exp(se3_log(t));
    CHECK(pose_diff(back, t) < 1e-8);
  }
  // Near-pi rotations use the robust log branch.
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    axis.normalize();
    Eigen::Vector3d w = axis * (M_PI - 1e-9);
    Eigen::Matrix3d r = so3_exp(w);
    Eigen::Vector3d back = so3_log(r);
    CHECK((so3_exp(back) - r).cwiseAbs().maxCoeff() < 1e-7);
  }
}

TEST_CASE("se3 right jacobian inverse matches finite differences") {
  Rng rng(23);
  const double eps = 1e-6;
  for (int trial = 0; trial < 30; ++trial) {
    Vector6d xi;
    for (int i = 0; i < 3; ++i) xi[i] = rng.uniform(-1.5, 1.5);
    for (int i = 3; i < 6; ++i) xi[i] = rng.uniform(-5, 5);
    PoseSE3 t = se3_exp(xi);
    Matrix6d analytic = se3_right_jacobian_inverse(xi);
    Matrix6d fd;
    for (int c = 0; c < 6; ++c) {
      Vector6d dp = Vector6d::Zero(), dm = Vector6d::Zero();
      dp[c] = eps;
      dm[c] = -eps;
      Vector6d rp = se3_log(compose(t, se3_exp(dp)));
      Vector6d rm = se3_log(compose(t, se3_exp(dm)));
      fd.col(c) = (rp - rm) / (2.0 * eps);
    }
    CHECK((analytic - fd).cwiseAbs().maxCoeff() < 1e-5);
  }
}

TEST_CASE("adjoint identity exp(Ad_T xi) == T exp(xi) T^-1") {
  Rng rng(29);
  for (int trial = 0; trial < 20; ++trial) {
    PoseSE3 t = random_pose(rng);
    Vector6d xi;
    for (int i = 0; i < 6; ++i) xi[i] = rng.uniform(-0.5, 0.5);
    PoseSE3 lhs = se3_exp(se3_adjoint(t) * xi);
    PoseSE3 rhs = compose(compose(t, se3_exp(xi)), inverse(t));
    CHECK(pose_diff(lhs, rhs) < 1e-9);
  }
}
