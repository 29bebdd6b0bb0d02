#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "tacmap/cloud.hpp"
#include "tacmap/geometry.hpp"

namespace tacmap::reg {

struct RansacParams {
  int max_iterations = 100000;
  double inlier_distance = 0.525;  // mm, 1.5 x voxel by default
  int min_inliers = 25;
  double confidence = 0.999;          // early-exit probability
  double edge_length_tolerance = 0.9; // triplet similarity prune, Open3D-style
};

struct IcpParams {
  int max_iterations = 50;
  double convergence_delta = 1e-6;           // relative objective decrease
  double max_correspondence_distance = 0.7;  // mm, 2 x voxel by default
};

struct RegistrationParams {
  double voxel_size = 0.35;         // mm
  double pitch_threshold_deg = 70.0;
  double fpfh_radius = 1.75;        // mm, 5 x voxel by default
  int normal_knn = 20;
  RansacParams ransac;
  IcpParams icp;
  std::uint64_t seed = 0;

  void validate() const;
};

struct RegistrationResult {
  PoseSE3 transform;  // target <- source
  double fitness = 0.0;
  double rmse = 0.0;
  bool converged = false;
  bool objective_monotone = true;  // point-to-plane objective never increased
};

// One centroid per occupied voxel; averaged normals are renormalized.
// Output order is deterministic (sorted voxel index).
LocalTactileMap voxel_downsample(const LocalTactileMap& m, double voxel);

// kNN plane-fit normals oriented toward +z (tactile maps are 2.5-D).
void estimate_normals(LocalTactileMap& m, int knn);

struct RoiResult {
  LocalTactileMap map;
  bool fallback = false;  // no deformed points found; full cloud returned
};

// Keeps everything inside the bounding box of the significantly deformed
// points (normal pitch below the threshold).
RoiResult extract_roi(const LocalTactileMap& m, double pitch_threshold_deg);

struct FpfhFeatures {
  Eigen::MatrixXd histograms;       // 33 x n
  std::vector<std::uint8_t> isolated;  // 1 when a point had no neighbors in radius
};

// Fast point feature histograms: 3 angular features x 11 bins, SPFH plus
// distance-weighted neighbor accumulation.
FpfhFeatures compute_fpfh(const LocalTactileMap& m, double radius);

// RANSAC over FPFH correspondences (3-point samples, edge-length pruning,
// Umeyama refit over inliers). Deterministic for a fixed params.seed.
RegistrationResult global_register(const LocalTactileMap& src, const LocalTactileMap& tgt,
                                   const RegistrationParams& params);

// Point-to-plane ICP from an initial guess. The objective over the current
// correspondence set never increases (step halving enforces it).
RegistrationResult icp_refine(const LocalTactileMap& src, const LocalTactileMap& tgt,
                              const PoseSE3& init, const RegistrationParams& params);

// Downsample + normals + ROI, the standard preprocessing before matching.
LocalTactileMap preprocess(const LocalTactileMap& m, const RegistrationParams& params,
                           bool* roi_fallback = nullptr);

// Coarse-to-fine on preprocessed clouds.
RegistrationResult register_pair(const LocalTactileMap& src_pre, const LocalTactileMap& tgt_pre,
                                 const RegistrationParams& params);

struct OdometryResult {
  std::vector<PoseSE3> poses;                  // pose[0] = identity
  std::vector<RegistrationResult> pairwise;    // result k aligns frame k+1 to frame k
  std::vector<LocalTactileMap> preprocessed;   // per input frame
};

// Chained pairwise registration; throws naming the frame pair on failure (a
// wrong odometry edge would poison everything downstream).
OdometryResult sequential_odometry(const std::vector<LocalTactileMap>& frames,
                                   const RegistrationParams& params);

}  // namespace tacmap::reg
