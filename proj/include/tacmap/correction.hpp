#pragma once

#include <string>

#include "tacmap/cloud.hpp"

namespace tacmap::corr {

// Center circle C (radius inner_px) and annulus A (inner_px..outer_px) around
// the image center, used for the per-frame force statistic. The two regions
// are required to have approximately equal area (within 20%) so their means
// carry similar weight.
struct RegionPartition {
  int outer_px = 150;
  int inner_px = 110;

  RegionPartition() = default;
  RegionPartition(int outer, int inner);

  double area_mismatch() const;  // |area(C) - area(A)| / area(C)
  void validate() const;
};

// Mean depth over C minus mean depth over A, in mm. The map must be an
// organized full grid covering both regions.
double depth_deviation(const LocalTactileMap& m, const RegionPartition& part);

// Flat press at the reference force: the bias template every frame is
// corrected against.
struct StandardFrame {
  LocalTactileMap map;
  double deviation = 0.0;  // its own depth_deviation, cached
  RegionPartition partition;
  double clamp = 1.1;
};

// Validates the template: a standard flat press must show measurable bias
// (|deviation| > 1e-4 mm), otherwise the ratio estimate is ill-posed.
StandardFrame make_standard_frame(LocalTactileMap map, const RegionPartition& part,
                                  double clamp = 1.1);

// Relative force coefficient: ratio of the frame's deviation to the
// standard's, clamped to [0, std.clamp]. Values above the clamp indicate a
// curved contact; negative ratios mean no correction.
double estimate_alpha(const LocalTactileMap& m, const StandardFrame& std_frame);

// Depth correction: z'(u,v) = z(u,v) - alpha * z_s(u,v); x, y unchanged,
// normals recomputed. Grids must be pixel-aligned (same shape).
LocalTactileMap correct(const LocalTactileMap& m, const StandardFrame& std_frame, double alpha);

// PLY + JSON sidecar persistence. base path "x" writes "x.ply" and "x.json".
void save_standard_frame(const std::string& base_path, const StandardFrame& frame);
StandardFrame load_standard_frame(const std::string& base_path);

}  // namespace tacmap::corr
