#include "tacmap/correction.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "tacmap/io.hpp"

namespace tacmap::corr {

RegionPartition::RegionPartition(int outer, int inner) : outer_px(outer), inner_px(inner) {
  validate();
}

double RegionPartition::area_mismatch() const {
  double c = static_cast<double>(inner_px) * inner_px;
  double a = static_cast<double>(outer_px) * outer_px - c;
  return std::abs(c - a) / c;
}

void RegionPartition::validate() const {
  if (inner_px <= 0 || outer_px <= inner_px) {
    throw std::invalid_argument("RegionPartition: need 0 < inner < outer");
  }
  if (area_mismatch() >= 0.20) {
    throw std::invalid_argument("RegionPartition: circle/annulus areas differ by more than 20%");
  }
}

double depth_deviation(const LocalTactileMap& m, const RegionPartition& part) {
  part.validate();
  if (!m.organized() ||
      m.points.size() != static_cast<std::size_t>(m.grid_width) * m.grid_height) {
    throw std::invalid_argument("depth_deviation: map must be an organized full grid");
  }
  double cx = 0.5 * (m.grid_width - 1), cy = 0.5 * (m.grid_height - 1);
  if (part.outer_px > std::min(cx, cy) + 0.5) {
    throw std::invalid_argument("depth_deviation: partition does not fit inside the map");
  }
  double sum_c = 0.0, sum_a = 0.0;
  std::size_t n_c = 0, n_a = 0;
  double r2 = static_cast<double>(part.inner_px) * part.inner_px;
  double out2 = static_cast<double>(part.outer_px) * part.outer_px;
  for (int y = 0; y < m.grid_height; ++y) {
    for (int x = 0; x < m.grid_width; ++x) {
      double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
      if (d2 > out2) continue;
      double z = m.points[static_cast<std::size_t>(y) * m.grid_width + x].z();
      if (d2 <= r2) {
        sum_c += z;
        ++n_c;
      } else {
        sum_a += z;
        ++n_a;
      }
    }
  }
  if (n_c == 0 || n_a == 0) throw std::runtime_error("depth_deviation: empty region");
  return sum_c / static_cast<double>(n_c) - sum_a / static_cast<double>(n_a);
}

StandardFrame make_standard_frame(LocalTactileMap map, const RegionPartition& part,
                                  double clamp) {
  if (!(clamp > 0.0)) throw std::invalid_argument("make_standard_frame: clamp must be positive");
  StandardFrame frame;
  frame.deviation = depth_deviation(map, part);
  if (std::abs(frame.deviation) <= 1e-4) {
    throw std::invalid_argument(
        "make_standard_frame: standard press shows no measurable arc bias");
  }
  frame.map = std::move(map);
  frame.partition = part;
  frame.clamp = clamp;
  return frame;
}

double estimate_alpha(const LocalTactileMap& m, const StandardFrame& std_frame) {
  double ratio = depth_deviation(m, std_frame.partition) / std_frame.deviation;
  if (ratio > std_frame.clamp) return std_frame.clamp;
  if (ratio < 0.0) return 0.0;
  return ratio;
}

LocalTactileMap correct(const LocalTactileMap& m, const StandardFrame& std_frame, double alpha) {
  if (m.grid_width != std_frame.map.grid_width || m.grid_height != std_frame.map.grid_height ||
      m.points.size() != std_frame.map.points.size()) {
    throw std::invalid_argument("correct: frame and standard grids are not pixel-aligned");
  }
  LocalTactileMap out = m;
  for (std::size_t i = 0; i < out.points.size(); ++i) {
    out.points[i].z() -= alpha * std_frame.map.points[i].z();
  }
  if (out.organized() &&
      out.points.size() == static_cast<std::size_t>(out.grid_width) * out.grid_height) {
    recompute_grid_normals(out);
  }
  return out;
}

void save_standard_frame(const std::string& base_path, const StandardFrame& frame) {
  io::save_ply(base_path + ".ply", frame.map);
  nlohmann::json meta = {{"deviation", frame.deviation},
                         {"outer_px", frame.partition.outer_px},
                         {"inner_px", frame.partition.inner_px},
                         {"clamp", frame.clamp},
                         {"grid_width", frame.map.grid_width},
                         {"grid_height", frame.map.grid_height},
                         {"pixel_pitch", frame.map.pixel_pitch},
                         {"frame_id", frame.map.frame_id}};
  io::write_text_file(base_path + ".json", meta.dump(2) + "\n");
}

StandardFrame load_standard_frame(const std::string& base_path) {
  nlohmann::json meta = nlohmann::json::parse(io::read_text_file(base_path + ".json"));
  StandardFrame frame;
  frame.map = io::load_ply(base_path + ".ply");
  frame.map.grid_width = meta.at("grid_width");
  frame.map.grid_height = meta.at("grid_height");
  frame.map.pixel_pitch = meta.at("pixel_pitch");
  frame.map.frame_id = meta.value("frame_id", 0);
  frame.deviation = meta.at("deviation");
  frame.partition = RegionPartition(meta.at("outer_px"), meta.at("inner_px"));
  frame.clamp = meta.at("clamp");
  if (std::abs(frame.deviation) <= 1e-4) {
    throw std::runtime_error(base_path + ": stored standard frame has no measurable bias");
  }
  return frame;
}

}  // namespace tacmap::corr
