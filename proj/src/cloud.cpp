#include "tacmap/cloud.hpp"

#include <cmath>
#include <stdexcept>

namespace tacmap {

void LocalTactileMap::validate() const {
  for (const auto& p : points) {
    if (!p.allFinite()) throw std::invalid_argument("LocalTactileMap: non-finite point");
  }
  if (!normals.empty()) {
    if (normals.size() != points.size()) {
      throw std::invalid_argument("LocalTactileMap: normal count mismatch");
    }
    for (const auto& n : normals) {
      if (std::abs(n.norm() - 1.0) > 1e-6) {
        throw std::invalid_argument("LocalTactileMap: normal is not unit length");
      }
    }
  }
  if (organized()) {
    std::size_t cells = static_cast<std::size_t>(grid_width) * grid_height;
    if (points.size() > cells) {
      throw std::invalid_argument("LocalTactileMap: more points than grid cells");
    }
  }
}

LocalTactileMap transform_map(const LocalTactileMap& m, const PoseSE3& p) {
  LocalTactileMap out = m;
  for (auto& pt : out.points) pt = p.apply(pt);
  for (auto& n : out.normals) n = p.rotation() * n;
  return out;
}

Eigen::Vector3d centroid(const LocalTactileMap& m) {
  if (m.points.empty()) throw std::invalid_argument("centroid: empty map");
  Eigen::Vector3d c = Eigen::Vector3d::Zero();
  for (const auto& p : m.points) c += p;
  return c / static_cast<double>(m.points.size());
}

void recompute_grid_normals(LocalTactileMap& m) {
  if (!m.organized() ||
      m.points.size() != static_cast<std::size_t>(m.grid_width) * m.grid_height) {
    throw std::invalid_argument("recompute_grid_normals: map must be a full grid");
  }
  int w = m.grid_width;
  int h = m.grid_height;
  double pitch = m.pixel_pitch;
  m.normals.resize(m.points.size());
  auto z_at = [&](int x, int y) { return m.points[static_cast<std::size_t>(y) * w + x].z(); };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      int x0 = std::max(0, x - 1), x1 = std::min(w - 1, x + 1);
      int y0 = std::max(0, y - 1), y1 = std::min(h - 1, y + 1);
      double dzdx = (z_at(x1, y) - z_at(x0, y)) / ((x1 - x0) * pitch);
      double dzdy = (z_at(x, y1) - z_at(x, y0)) / ((y1 - y0) * pitch);
      Eigen::Vector3d n(-dzdx, -dzdy, 1.0);
      m.normals[static_cast<std::size_t>(y) * w + x] = n.normalized();
    }
  }
}

}  // namespace tacmap
