#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tacmap/cloud.hpp"
#include "tacmap/geometry.hpp"

namespace tacmap::metrics {

struct PlaneModel {
  Eigen::Vector3d normal = Eigen::Vector3d::UnitZ();  // unit length
  double offset = 0.0;                                // plane: normal . p + offset = 0
  int inlier_count = 0;
};

struct SphereModel {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
  int inlier_count = 0;
};

struct RansacFitParams {
  double inlier_distance = 0.1;  // mm; sphere fits default to 0.3
  int iterations = 1000;
  std::uint64_t seed = 0;
};

// Robust plane fit: best 3-point hypothesis by inlier count, refined by least
// squares over its inliers. Degenerate (near-collinear) samples are skipped;
// throws when every sample is degenerate or fewer than 3 points are given.
PlaneModel fit_plane_ransac(const std::vector<Eigen::Vector3d>& points,
                            const RansacFitParams& params);

// Robust sphere fit from 4-point hypotheses with algebraic least-squares
// refinement. Throws on coplanar clouds (no finite-radius solution).
SphereModel fit_sphere_ransac(const std::vector<Eigen::Vector3d>& points,
                              const RansacFitParams& params);

// Mean absolute point-to-plane distance; the rms flag switches to root mean
// square for comparison runs.
double flatness(const std::vector<Eigen::Vector3d>& points, const PlaneModel& plane,
                bool rms = false);

// Translation norm of the relative pose error between the (Q) reference and
// (P) estimated first/last poses: || trans( (Q_f^-1 Q_l)^-1 (P_f^-1 P_l) ) ||.
double rpe_first_last(const PoseSE3& q_first, const PoseSE3& q_last, const PoseSE3& p_first,
                      const PoseSE3& p_last);

struct Deviation {
  double mean = 0.0;
  double stddev = 0.0;
};

// Nearest-neighbor distance statistics from each cloud point to the
// reference. Inputs are expected to be pre-aligned.
Deviation cloud_deviation(const std::vector<Eigen::Vector3d>& cloud,
                          const std::vector<Eigen::Vector3d>& reference);

}  // namespace tacmap::metrics
