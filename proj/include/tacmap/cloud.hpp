#pragma once

#include <Eigen/Dense>
#include <vector>

#include "tacmap/geometry.hpp"

namespace tacmap {

// Metric 3-D point cloud of one press, in the sensor frame. Maps fresh from
// depth integration are organized (grid_width/grid_height > 0, one point per
// pixel); downsampled or cropped clouds are unorganized (grid dims 0).
struct LocalTactileMap {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;  // empty, or unit vectors per point
  int frame_id = 0;
  int grid_width = 0;
  int grid_height = 0;
  double pixel_pitch = 0.0;  // mm, meaningful only when organized

  bool organized() const { return grid_width > 0 && grid_height > 0; }
  bool has_normals() const { return !normals.empty(); }

  void validate() const;  // throws on invariant violation
};

LocalTactileMap transform_map(const LocalTactileMap& m, const PoseSE3& p);

Eigen::Vector3d centroid(const LocalTactileMap& m);

// Unit normals of an organized map from central differences of its z grid.
void recompute_grid_normals(LocalTactileMap& m);

}  // namespace tacmap
