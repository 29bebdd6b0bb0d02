#include "tacmap/metrics.hpp"

#include <cmath>
#include <stdexcept>

#include "tacmap/rng.hpp"
#include "tacmap/spatial.hpp"

namespace tacmap::metrics {

namespace {

// Least-squares plane through a point set (smallest covariance eigenvector).
PlaneModel plane_least_squares(const std::vector<Eigen::Vector3d>& points,
                               const std::vector<std::size_t>& idx) {
  Eigen::Vector3d mean = Eigen::Vector3d::Zero();
  for (std::size_t i : idx) mean += points[i];
  mean /= static_cast<double>(idx.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (std::size_t i : idx) {
    Eigen::Vector3d d = points[i] - mean;
    cov += d * d.transpose();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
  PlaneModel plane;
  plane.normal = eig.eigenvectors().col(0).normalized();
  plane.offset = -plane.normal.dot(mean);
  return plane;
}

// Algebraic sphere fit (linear least squares in center and radius).
bool sphere_least_squares(const std::vector<Eigen::Vector3d>& points,
                          const std::vector<std::size_t>& idx, SphereModel* out) {
  Eigen::Matrix4d ata = Eigen::Matrix4d::Zero();
  Eigen::Vector4d atb = Eigen::Vector4d::Zero();
  for (std::size_t i : idx) {
    const Eigen::Vector3d& p = points[i];
    Eigen::Vector4d row(2.0 * p.x(), 2.0 * p.y(), 2.0 * p.z(), 1.0);
    double rhs = p.squaredNorm();
    ata += row * row.transpose();
    atb += row * rhs;
  }
  Eigen::FullPivLU<Eigen::Matrix4d> lu(ata);
  if (!lu.isInvertible()) return false;
  Eigen::Vector4d sol = lu.solve(atb);
  Eigen::Vector3d center = sol.head<3>();
  double r2 = sol[3] + center.squaredNorm();
  if (!(r2 > 0.0) || !std::isfinite(r2)) return false;
  out->center = center;
  out->radius = std::sqrt(r2);
  return true;
}

}  // namespace

PlaneModel fit_plane_ransac(const std::vector<Eigen::Vector3d>& points,
                            const RansacFitParams& params) {
  std::size_t n = points.size();
  if (n < 3) throw std::invalid_argument("fit_plane_ransac: need at least 3 points");
  Rng rng(params.seed);
  PlaneModel best;
  int best_inliers = -1;
  bool any_valid = false;

  for (int it = 0; it < params.iterations; ++it) {
    std::size_t a = rng.uniform_index(n), b = rng.uniform_index(n), c = rng.uniform_index(n);
    if (a == b || b == c || a == c) continue;
    Eigen::Vector3d u = points[b] - points[a];
    Eigen::Vector3d v = points[c] - points[a];
    Eigen::Vector3d normal = u.cross(v);
    double len = normal.norm();
    if (len < 1e-12 * std::max(1.0, u.norm() * v.norm())) continue;  // collinear sample
    any_valid = true;
    normal /= len;
    double offset = -normal.dot(points[a]);
    int inliers = 0;
    for (const auto& p : points) {
      if (std::abs(normal.dot(p) + offset) <= params.inlier_distance) ++inliers;
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best.normal = normal;
      best.offset = offset;
    }
  }
  if (!any_valid) throw std::runtime_error("fit_plane_ransac: all samples degenerate");

  std::vector<std::size_t> inlier_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(best.normal.dot(points[i]) + best.offset) <= params.inlier_distance) {
      inlier_idx.push_back(i);
    }
  }
  if (inlier_idx.size() >= 3) {
    PlaneModel refined = plane_least_squares(points, inlier_idx);
    if (refined.normal.dot(best.normal) < 0.0) {
      refined.normal = -refined.normal;
      refined.offset = -refined.offset;
    }
    best = refined;
    best.inlier_count = 0;
    for (const auto& p : points) {
      if (std::abs(best.normal.dot(p) + best.offset) <= params.inlier_distance) {
        ++best.inlier_count;
      }
    }
  } else {
    best.inlier_count = static_cast<int>(inlier_idx.size());
  }
  return best;
}

SphereModel fit_sphere_ransac(const std::vector<Eigen::Vector3d>& points,
                              const RansacFitParams& params) {
  std::size_t n = points.size();
  if (n < 4) throw std::invalid_argument("fit_sphere_ransac: need at least 4 points");
  double inlier_dist = params.inlier_distance;
  Rng rng(params.seed);
  SphereModel best;
  int best_inliers = -1;

  for (int it = 0; it < params.iterations; ++it) {
    std::size_t idx[4];
    bool distinct = true;
    for (int k = 0; k < 4; ++k) {
      idx[k] = rng.uniform_index(n);
      for (int j = 0; j < k; ++j) distinct &= (idx[j] != idx[k]);
    }
    if (!distinct) continue;
    // Sphere through 4 points: differences of |p - c|^2 = r^2 are linear in c.
    Eigen::Matrix3d a;
    Eigen::Vector3d rhs;
    for (int k = 0; k < 3; ++k) {
      Eigen::Vector3d d = points[idx[k + 1]] - points[idx[0]];
      a.row(k) = 2.0 * d.transpose();
      rhs[k] = points[idx[k + 1]].squaredNorm() - points[idx[0]].squaredNorm();
    }
    Eigen::FullPivLU<Eigen::Matrix3d> lu(a);
    if (!lu.isInvertible()) continue;  // coplanar sample
    Eigen::Vector3d center = lu.solve(rhs);
    double radius = (points[idx[0]] - center).norm();
    if (!std::isfinite(radius) || radius <= 0.0) continue;
    int inliers = 0;
    for (const auto& p : points) {
      if (std::abs((p - center).norm() - radius) <= inlier_dist) ++inliers;
    }
    if (inliers > best_inliers) {
      best_inliers = inliers;
      best.center = center;
      best.radius = radius;
    }
  }
  if (best_inliers < 0) {
    throw std::runtime_error("fit_sphere_ransac: no valid sample (coplanar cloud?)");
  }

  std::vector<std::size_t> inlier_idx;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs((points[i] - best.center).norm() - best.radius) <= inlier_dist) {
      inlier_idx.push_back(i);
    }
  }
  SphereModel refined = best;
  if (inlier_idx.size() >= 4 && sphere_least_squares(points, inlier_idx, &refined)) {
    best = refined;
  }
  best.inlier_count = 0;
  for (const auto& p : points) {
    if (std::abs((p - best.center).norm() - best.radius) <= inlier_dist) ++best.inlier_count;
  }
  if (!(best.radius > 0.0)) {
    throw std::runtime_error("fit_sphere_ransac: degenerate fit");
  }
  return best;
}

double flatness(const std::vector<Eigen::Vector3d>& points, const PlaneModel& plane,
                bool rms) {
  if (points.empty()) throw std::invalid_argument("flatness: empty cloud");
  if (std::abs(plane.normal.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("flatness: plane normal must be unit length");
  }
  double acc = 0.0;
  for (const auto& p : points) {
    double d = plane.normal.dot(p) + plane.offset;
    acc += rms ? d * d : std::abs(d);
  }
  acc /= static_cast<double>(points.size());
  return rms ? std::sqrt(acc) : acc;
}

double rpe_first_last(const PoseSE3& q_first, const PoseSE3& q_last, const PoseSE3& p_first,
                      const PoseSE3& p_last) {
  PoseSE3 q_rel = compose(inverse(q_first), q_last);
  PoseSE3 p_rel = compose(inverse(p_first), p_last);
  PoseSE3 rpe = compose(inverse(q_rel), p_rel);
  return rpe.translation().norm();
}

Deviation cloud_deviation(const std::vector<Eigen::Vector3d>& cloud,
                          const std::vector<Eigen::Vector3d>& reference) {
  if (cloud.empty() || reference.empty()) {
    throw std::invalid_argument("cloud_deviation: empty input");
  }
  KdTree3 tree(reference);
  double sum = 0.0, sum2 = 0.0;
  for (const auto& p : cloud) {
    double d = std::sqrt(tree.nearest(p).second);
    sum += d;
    sum2 += d * d;
  }
  double n = static_cast<double>(cloud.size());
  Deviation dev;
  dev.mean = sum / n;
  double var = std::max(0.0, sum2 / n - dev.mean * dev.mean);
  dev.stddev = std::sqrt(var);
  return dev;
}

}  // namespace tacmap::metrics
