#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tacmap/cloud.hpp"
#include "tacmap/geometry.hpp"
#include "tacmap/image.hpp"

namespace tacmap::io {

// PLY export/import of point clouds (positions + optional normals).
// Export uses float32 properties; "binary" selects binary_little_endian.
void save_ply(const std::string& path, const LocalTactileMap& m, bool binary = true);
LocalTactileMap load_ply(const std::string& path);

// Trajectory CSV: one pose per line as 12 comma-separated numbers, the
// row-major [R|t] (rows r00 r01 r02 tx, r10 ..., r20 ...). Formatting uses
// %.17g so a rewrite of a loaded file is byte-identical.
void save_trajectory_csv(const std::string& path, const std::vector<PoseSE3>& poses);
std::vector<PoseSE3> load_trajectory_csv(const std::string& path);
std::string format_pose_line(const PoseSE3& p);

// Grid container: small JSON header followed by raw float32 planes.
// DepthMap stores one plane ("z"), GradientField two ("gx","gy").
void save_depth(const std::string& path, const DepthMap& d);
DepthMap load_depth(const std::string& path);
void save_gradient_field(const std::string& path, const GradientField& g);
GradientField load_gradient_field(const std::string& path);

// Lossless (float64) gradient-field container used for cached intermediates,
// where reload must reproduce bit-identical downstream results.
void save_gradient_field_f64(const std::string& path, const GradientField& g);
GradientField load_gradient_field_f64(const std::string& path);

// Lossless map container (float64 points/normals + grid metadata) for caches.
void save_map_f64(const std::string& path, const LocalTactileMap& m);
LocalTactileMap load_map_f64(const std::string& path);

// 16-bit grayscale PNG, row-major. Used for heightfield import/export.
void save_png16(const std::string& path, int width, int height,
                const std::vector<std::uint16_t>& values);
std::vector<std::uint16_t> load_png16(const std::string& path, int* width, int* height);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& content);

}  // namespace tacmap::io
