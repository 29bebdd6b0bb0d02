#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "tacmap/io.hpp"
#include "tacmap/metrics.hpp"
#include "tacmap/poisson.hpp"
#include "tacmap/sim.hpp"

using namespace tacmap;
using namespace tacmap::sim;

namespace {

SensorProfile quiet_profile() {
  SensorProfile prof;
  prof.depth_noise_sigma = 0.0;
  return prof;
}

PressSpec centered_press(const SensorProfile& prof, const ObjectHeightfield& obj, double pen,
                         double force = 1.0, std::uint64_t seed = 0) {
  PressSpec spec;
  double top = *std::max_element(obj.z.begin(), obj.z.end());
  spec.pose = press_pose(prof, 0.5 * obj.extent_x(), 0.5 * obj.extent_y(), top - pen);
  spec.force_level = force;
  spec.noise_seed = seed;
  return spec;
}

}  // namespace

TEST_CASE("flat press with arc disabled and zero noise is a zero gradient field") {
  SensorProfile prof = quiet_profile();
  prof.arc_enabled = false;
  ObjectHeightfield obj = make_flat(20.0, 16.0, 0.1);
  GradientField g = render_press(obj, centered_press(prof, obj, 0.3), prof);
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    CHECK(std::abs(g.gx[i]) < 1e-12);
    CHECK(std::abs(g.gy[i]) < 1e-12);
  }
}

TEST_CASE("flat press at standard force reconstructs the default arc radius") {
  SensorProfile prof = quiet_profile();
  ObjectHeightfield obj = make_flat(20.0, 16.0, 0.1);
  GradientField g = render_press(obj, centered_press(prof, obj, 0.3), prof);
  LocalTactileMap m = poisson::depth_to_map(poisson::integrate(g));
  metrics::SphereModel s =
      metrics::fit_sphere_ransac(m.points, {.inlier_distance = 0.3, .iterations = 200, .seed = 1});
  CHECK(std::abs(s.radius - 193.3) / 193.3 < 0.005);
}

TEST_CASE("fitted radius decreases strictly as force increases") {
  SensorProfile prof = quiet_profile();
  ObjectHeightfield obj = make_flat(20.0, 16.0, 0.1);
  double prev = 1e9;
  for (double force : {1.0, 1.2, 1.4, 1.6, 1.8, 2.0}) {
    GradientField g = render_press(obj, centered_press(prof, obj, 0.3, force), prof);
    LocalTactileMap m = poisson::depth_to_map(poisson::integrate(g));
    metrics::SphereModel s = metrics::fit_sphere_ransac(
        m.points, {.inlier_distance = 0.3, .iterations = 200, .seed = 2});
    CHECK(s.radius < prev);
    CHECK(std::abs(s.radius - prof.arc_radius(force)) / prof.arc_radius(force) < 0.01);
    prev = s.radius;
  }
}

TEST_CASE("arc radius curve interpolates anchors monotonically") {
  SensorProfile prof;
  CHECK(prof.arc_radius(1.0) == doctest::Approx(193.3));
  CHECK(prof.arc_radius(2.0) == doctest::Approx(117.8));
  CHECK(prof.arc_radius(1.3) == doctest::Approx(0.5 * (183.1 + 174.9)));
  double prev = prof.arc_radius(0.5);
  for (double f = 0.6; f <= 2.01; f += 0.1) {
    double r = prof.arc_radius(f);
    CHECK(r < prev);
    prev = r;
  }
}

TEST_CASE("hemisphere press gradients match the analytic sphere within 1e-6") {
  SensorProfile prof = quiet_profile();
  prof.arc_enabled = false;
  double radius = 20.0, protrusion = 2.5, pen = 0.4;
  ObjectHeightfield obj = make_hemisphere(radius, protrusion, 30.0, 30.0, 0.05);
  PressSpec spec = centered_press(prof, obj, pen);
  PressDetail detail = render_press_detail(obj, spec, prof);

  double contact_r = std::sqrt(pen * (2.0 * radius - pen));
  double cx = 0.5 * (prof.width - 1), cy = 0.5 * (prof.height - 1);
  int checked = 0;
  for (int y = 0; y < prof.height; ++y) {
    for (int x = 0; x < prof.width; ++x) {
      double dx = (x - cx) * prof.pixel_pitch, dy = (y - cy) * prof.pixel_pitch;
      double rho = std::hypot(dx, dy);
      if (rho > 0.8 * contact_r) continue;
      double wz = std::sqrt(radius * radius - rho * rho);
      CHECK(std::abs(detail.grad.x(x, y) - (-dx / wz)) < 1e-6);
      CHECK(std::abs(detail.grad.y(x, y) - (-dy / wz)) < 1e-6);
      ++checked;
    }
  }
  CHECK(checked > 3000);
}

TEST_CASE("renders are deterministic per seed") {
  SensorProfile prof;  // default noise sigma 0.01
  ObjectHeightfield obj = make_embossed_plate(20.0, 16.0, 0.1, 0.15, 12, 9);
  PressSpec spec = centered_press(prof, obj, 0.3, 1.2, 424242);
  GradientField a = render_press(obj, spec, prof);
  GradientField b = render_press(obj, spec, prof);
  CHECK(a.gx == b.gx);
  CHECK(a.gy == b.gy);
  spec.noise_seed = 424243;
  GradientField c = render_press(obj, spec, prof);
  CHECK(a.gx != c.gx);
}

TEST_CASE("zero press: noiseless field is zero, shaded image is uniform") {
  SensorProfile prof = quiet_profile();
  GradientField g = render_zero_press(prof, 1);
  for (double v : g.gx) CHECK(v == 0.0);
  TactileImage img = shade(g, prof);
  for (float v : img.data) CHECK(v == doctest::Approx(prof.shading_base));
}

TEST_CASE("shading map is invertible on in-range gradients") {
  SensorProfile prof = quiet_profile();
  GradientField g = GradientField::create(32, 24, prof.pixel_pitch);
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      g.x(x, y) = 3.0 * std::sin(0.3 * x + 0.1 * y);
      g.y(x, y) = 3.0 * std::cos(0.2 * x - 0.4 * y);
    }
  }
  GradientField back = invert_shading(shade(g, prof), prof);
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    // float32 image quantization limits the round trip
    CHECK(std::abs(back.gx[i] - g.gx[i]) < 1e-5);
    CHECK(std::abs(back.gy[i] - g.gy[i]) < 1e-5);
  }
}

TEST_CASE("sphere calibration set: labels stay inside the image") {
  SensorProfile prof;
  auto set6 = render_sphere_calibration_set(6.0, 60, prof, 7);
  REQUIRE(set6.size() == 60);
  for (const auto& s : set6) {
    CHECK(s.pressed);
    CHECK(s.radius_px > 5.0);
    CHECK(s.center_px.x() - s.radius_px >= 0.0);
    CHECK(s.center_px.x() + s.radius_px <= prof.width - 1);
    CHECK(s.center_px.y() - s.radius_px >= 0.0);
    CHECK(s.center_px.y() + s.radius_px <= prof.height - 1);
  }
  auto set12 = render_sphere_calibration_set(12.0, 10, prof, 8);
  CHECK(set12.size() == 10);
  for (const auto& s : set12) {
    CHECK(s.radius_px * prof.pixel_pitch < 6.0);  // contact circle below sphere radius
  }
}

TEST_CASE("trajectory rendering: single pose, overlap check, loop closure geometry") {
  SensorProfile prof = quiet_profile();
  ObjectHeightfield obj = make_embossed_plate(40.0, 24.0, 0.1, 0.15, 40, 11);

  PoseSE3 p0 = press_pose(prof, 10.0, 12.0, 0.25 - 0.3);
  TrajectoryRender single = render_trajectory(obj, {p0}, {1.0}, prof, 3);
  CHECK(single.frames.size() == 1);
  CHECK((single.ground_truth[0].matrix() - p0.matrix()).cwiseAbs().maxCoeff() == 0.0);

  // Two far-apart footprints violate the overlap precondition.
  PoseSE3 far = press_pose(prof, 30.0, 12.0, 0.25 - 0.3);
  CHECK_THROWS_WITH_AS(render_trajectory(obj, {p0, far}, {1.0, 1.0}, prof, 3),
                       doctest::Contains("frames 0 and 1"), std::invalid_argument);

  // A loop that returns to its start overlaps itself almost completely.
  CHECK(footprint_overlap(prof, p0, p0) == doctest::Approx(1.0));
  PoseSE3 nudged = press_pose(prof, 10.3, 12.0, 0.25 - 0.3, 0.02);
  CHECK(footprint_overlap(prof, p0, nudged) > 0.9);
  double half = footprint_overlap(prof, p0, press_pose(prof, 16.0, 12.0, -0.05));
  CHECK(half == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("press outside the object support throws") {
  SensorProfile prof = quiet_profile();
  ObjectHeightfield obj = make_flat(20.0, 16.0, 0.1);
  PressSpec spec;
  spec.pose = press_pose(prof, 19.0, 8.0, -0.3);  // footprint spills past the edge
  CHECK_THROWS_AS(render_press(obj, spec, prof), std::out_of_range);
}

TEST_CASE("force level outside range is rejected") {
  SensorProfile prof = quiet_profile();
  ObjectHeightfield obj = make_flat(20.0, 16.0, 0.1);
  PressSpec spec = centered_press(prof, obj, 0.3, 2.5);
  CHECK_THROWS_AS(render_press(obj, spec, prof), std::invalid_argument);
}

TEST_CASE("heightfield PNG round trip") {
  ObjectHeightfield obj = make_embossed_plate(12.0, 10.0, 0.1, 0.2, 6, 5);
  auto dir = std::filesystem::temp_directory_path();
  std::string png = (dir / "hf_test.png").string();
  std::string meta = (dir / "hf_test.json").string();
  save_heightfield(png, meta, obj);
  ObjectHeightfield back = load_heightfield(png, meta);
  REQUIRE(back.nx == obj.nx);
  REQUIRE(back.ny == obj.ny);
  CHECK(back.cell_size == doctest::Approx(obj.cell_size));
  double quantum = 0.2 / 65535.0;
  for (std::size_t i = 0; i < obj.z.size(); ++i) {
    CHECK(std::abs(back.z[i] - obj.z[i]) <= quantum);
  }
  std::remove(png.c_str());
  std::remove(meta.c_str());
}

TEST_CASE("profile validation catches bad anchor curves") {
  SensorProfile prof;
  prof.arc_radius_anchors = {{1.0, 100.0}, {1.5, 120.0}};  // radius increases
  CHECK_THROWS(prof.validate());
  prof.arc_radius_anchors = {{1.0, 100.0}};
  CHECK_THROWS(prof.validate());
}
