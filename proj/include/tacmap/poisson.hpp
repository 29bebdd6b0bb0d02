#pragma once

#include "tacmap/cloud.hpp"
#include "tacmap/image.hpp"

namespace tacmap::poisson {

// Integrates a gradient field into a depth map: the returned z minimizes
// ||grad z - g||^2 over the grid with natural (homogeneous Neumann) boundary
// conditions. Solved directly by a 2-D DCT, O(N log N), any grid size >= 2x2.
//
// The free constant is fixed so that the background region (pixels whose
// gradient magnitude is in the lowest decile) has median depth 0.
DepthMap integrate(const GradientField& g);

// Infinity norm of the discrete normal-equation residual A z - b, divided by
// max(||b||_inf, 1e-30). The direct solve keeps this at rounding level.
double integration_residual(const GradientField& g, const DepthMap& z);

// Lifts a depth grid to an organized point cloud, one point per pixel at
// (u * pixel_pitch, v * pixel_pitch, z), with unit normals from central
// differences.
LocalTactileMap depth_to_map(const DepthMap& d, int frame_id = 0);

}  // namespace tacmap::poisson
