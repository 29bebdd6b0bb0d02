#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tacmap/geometry.hpp"
#include "tacmap/image.hpp"

namespace tacmap::sim {

// Heightfield z(x, y) in mm over a rectangular support, sampled on a regular
// grid and evaluated with Catmull-Rom bicubic interpolation so height and its
// analytic gradient are consistent.
struct ObjectHeightfield {
  int nx = 0;
  int ny = 0;
  double cell_size = 0.1;  // mm
  double origin_x = 0.0;   // world position of grid node (0, 0)
  double origin_y = 0.0;
  std::vector<double> z;   // row-major, ny rows of nx

  double extent_x() const { return (nx - 1) * cell_size; }
  double extent_y() const { return (ny - 1) * cell_size; }
  bool contains(double x, double y, double margin = 0.0) const;

  double height(double x, double y) const;
  Eigen::Vector2d height_gradient(double x, double y) const;

  void validate() const;
};

ObjectHeightfield make_flat(double extent_x, double extent_y, double cell_size,
                            double base_z = 0.0);

// Flat plate with the top cap of a sphere protruding through its center.
ObjectHeightfield make_hemisphere(double sphere_radius, double protrusion, double extent_x,
                                  double extent_y, double cell_size);

// Flat plate with a seeded pattern of smooth raised marks (anisotropic
// bumps); the texture registration and loop closure key on.
ObjectHeightfield make_embossed_plate(double extent_x, double extent_y, double cell_size,
                                      double relief_height, int mark_count,
                                      std::uint64_t seed);

// 16-bit PNG + JSON sidecar ({cell_size, scale, offset}: height = value *
// scale + offset).
ObjectHeightfield load_heightfield(const std::string& png_path, const std::string& json_path);
void save_heightfield(const std::string& png_path, const std::string& json_path,
                      const ObjectHeightfield& obj);

// One press: where the sensor is, how hard, and the noise stream.
struct PressSpec {
  PoseSE3 pose;
  double force_level = 1.0;  // relative to the standard force, in [0.5, 2.0]
  std::uint64_t noise_seed = 0;

  void validate() const;
};

// Sensor geometry plus the two systematic error models: the arc-shaped gel
// bias (fitted sphere radius shrinking with force) and Gaussian depth noise.
struct SensorProfile {
  int width = 240;
  int height = 180;
  double pixel_pitch = kDefaultPixelPitch;

  double standard_force = 1.0;
  bool arc_enabled = true;
  // (force_level, fitted arc radius mm), radius strictly decreasing in force.
  std::vector<std::pair<double, double>> arc_radius_anchors = {
      {1.0, 193.3}, {1.2, 183.1}, {1.4, 174.9}, {1.6, 162.2}, {1.8, 143.7}, {2.0, 117.8}};
  double depth_noise_sigma = 0.01;  // mm

  // Linear three-light shading at 120 degree spacing; invertible for the
  // slopes this sensor sees.
  double shading_base = 0.5;
  double shading_gain = 0.1;

  // Center/annulus statistic radii in pixels; 0 derives them from the image
  // size (outer = 0.625 * min(w,h)/2, inner = outer * 110/150).
  int partition_outer_px = 0;
  int partition_inner_px = 0;

  double arc_radius(double force_level) const;  // monotone piecewise-linear
  double footprint_width() const { return width * pixel_pitch; }
  double footprint_height() const { return height * pixel_pitch; }
  int derived_partition_outer() const;
  int derived_partition_inner() const;

  void validate() const;
};

// Pose whose footprint center sits at (center_x, center_y), gel plane at
// plane_z, rotated by yaw about the world z axis and small tilts about x/y.
PoseSE3 press_pose(const SensorProfile& prof, double center_x, double center_y, double plane_z,
                   double yaw_rad = 0.0, double tilt_x_rad = 0.0, double tilt_y_rad = 0.0);

GradientField render_press(const ObjectHeightfield& obj, const PressSpec& spec,
                           const SensorProfile& prof);

struct PressDetail {
  GradientField grad;
  DepthMap depth;
  std::vector<std::uint8_t> contact;  // 1 where gel touches the object
};
PressDetail render_press_detail(const ObjectHeightfield& obj, const PressSpec& spec,
                                const SensorProfile& prof);

// Frame with nothing pressed: noise only.
GradientField render_zero_press(const SensorProfile& prof, std::uint64_t noise_seed);

TactileImage shade(const GradientField& g, const SensorProfile& prof);
// Least-squares inverse of the shading map (exact while no channel clamps).
GradientField invert_shading(const TactileImage& img, const SensorProfile& prof);

struct SphereSample {
  TactileImage image;
  bool pressed = false;
  Eigen::Vector2d center_px = Eigen::Vector2d::Zero();
  double radius_px = 0.0;   // contact circle radius
  double press_depth = 0.0; // mm
};

// Labeled sphere presses at random in-plane positions; labels are exact from
// the press geometry. Rendered at standard force.
std::vector<SphereSample> render_sphere_calibration_set(double sphere_diameter, int count,
                                                        const SensorProfile& prof,
                                                        std::uint64_t seed);

struct TrajectoryRender {
  std::vector<GradientField> frames;
  std::vector<PoseSE3> ground_truth;
};

// Renders one frame per pose. Consecutive footprints must overlap by at least
// min_overlap (area fraction); a violating pair throws with its indices.
TrajectoryRender render_trajectory(const ObjectHeightfield& obj,
                                   const std::vector<PoseSE3>& poses,
                                   const std::vector<double>& forces, const SensorProfile& prof,
                                   std::uint64_t seed, double min_overlap = 0.3);

// Area of the intersection of the two footprints divided by the footprint
// area (projected to the world xy plane).
double footprint_overlap(const SensorProfile& prof, const PoseSE3& a, const PoseSE3& b);

}  // namespace tacmap::sim
