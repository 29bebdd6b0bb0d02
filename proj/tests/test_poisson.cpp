#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <chrono>
#include <cmath>

#include "tacmap/poisson.hpp"
#include "tacmap/rng.hpp"

using namespace tacmap;

namespace {

// Analytic paraboloid z = -(x^2 + y^2) / (2R) centered on the grid.
struct Paraboloid {
  int w, h;
  double pitch, radius;
  double cx, cy;
  Paraboloid(int w_, int h_, double pitch_, double radius_)
      : w(w_), h(h_), pitch(pitch_), radius(radius_), cx(0.5 * (w_ - 1) * pitch_),
        cy(0.5 * (h_ - 1) * pitch_) {}
  double z(int x, int y) const {
    double dx = x * pitch - cx, dy = y * pitch - cy;
    return -(dx * dx + dy * dy) / (2.0 * radius);
  }
  double gx(int x, int y) const { return -(x * pitch - cx) / radius; }
  double gy(int x, int y) const { return -(y * pitch - cy) / radius; }
};

GradientField paraboloid_field(const Paraboloid& p) {
  GradientField g = GradientField::create(p.w, p.h, p.pitch);
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) {
      g.x(x, y) = p.gx(x, y);
      g.y(x, y) = p.gy(x, y);
    }
  }
  return g;
}

// Max |a - b| after removing the gauge constant (median of the difference).
double max_error_mod_constant(const std::vector<double>& a, const std::vector<double>& b) {
  REQUIRE(a.size() == b.size());
  std::vector<double> diff(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) diff[i] = a[i] - b[i];
  std::vector<double> sorted = diff;
  std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
  double shift = sorted[sorted.size() / 2];
  double err = 0.0;
  for (double d : diff) err = std::max(err, std::abs(d - shift));
  return err;
}

}  // namespace

TEST_CASE("zero gradient integrates to zero depth") {
  GradientField g = GradientField::create(64, 48, 0.05);
  DepthMap d = poisson::integrate(g);
  for (double z : d.z) CHECK(std::abs(z) < 1e-12);
}

TEST_CASE("paraboloid oracle: interior recovered within 1e-3 mm on 256x256") {
  Paraboloid p(256, 256, 0.05, 100.0);
  GradientField g = paraboloid_field(p);

  auto start = std::chrono::steady_clock::now();
  DepthMap d = poisson::integrate(g);
  double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  CHECK(seconds < 1.0);

  std::vector<double> truth(d.z.size());
  for (int y = 0; y < p.h; ++y) {
    for (int x = 0; x < p.w; ++x) truth[static_cast<std::size_t>(y) * p.w + x] = p.z(x, y);
  }
  // Compare up to the integration constant over the interior (boundary band
  // excluded per the solver contract).
  int band = 8;
  double err = 0.0;
  std::vector<double> diffs;
  for (int y = band; y < p.h - band; ++y) {
    for (int x = band; x < p.w - band; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * p.w + x;
      diffs.push_back(d.z[i] - truth[i]);
    }
  }
  double shift = diffs[diffs.size() / 2];
  std::nth_element(diffs.begin(), diffs.begin() + diffs.size() / 2, diffs.end());
  shift = diffs[diffs.size() / 2];
  for (int y = band; y < p.h - band; ++y) {
    for (int x = band; x < p.w - band; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * p.w + x;
      err = std::max(err, std::abs(d.z[i] - truth[i] - shift));
    }
  }
  CHECK(err < 1e-3);
}

TEST_CASE("normal-equation residual is at rounding level") {
  Paraboloid p(100, 80, 0.05, 60.0);
  GradientField g = paraboloid_field(p);
  Rng rng(2);
  for (auto& v : g.gx) v += rng.uniform(-0.2, 0.2);
  for (auto& v : g.gy) v += rng.uniform(-0.2, 0.2);
  DepthMap d = poisson::integrate(g);
  CHECK(poisson::integration_residual(g, d) < 1e-6);

  // Gauge invariance: a constant shift leaves the residual unchanged.
  DepthMap shifted = d;
  for (auto& z : shifted.z) z += 3.7;
  CHECK(std::abs(poisson::integration_residual(g, shifted) -
                 poisson::integration_residual(g, d)) < 1e-9);
}

TEST_CASE("linearity of the solve") {
  int w = 96, h = 72;
  double pitch = 0.05;

  // Two bumps with disjoint support on a shared zero background, so all three
  // solves anchor their gauge in the same flat region and equality is strict.
  auto bump_field = [&](double cx, double cy, double r, double amp) {
    GradientField g = GradientField::create(w, h, pitch);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double dx = x * pitch - cx, dy = y * pitch - cy;
        double rho = std::hypot(dx, dy);
        if (rho < r) {
          // z = amp * cos^2(pi rho / (2 r)) gradient
          double s = M_PI / (2.0 * r);
          double dz = -amp * 2.0 * std::cos(s * rho) * std::sin(s * rho) * s;
          if (rho > 1e-12) {
            g.x(x, y) = dz * dx / rho;
            g.y(x, y) = dz * dy / rho;
          }
        }
      }
    }
    return g;
  };
  GradientField g1 = bump_field(1.2, 1.2, 0.9, 0.3);
  GradientField g2 = bump_field(3.4, 2.2, 0.8, 0.2);
  double a = 1.7, b = -0.6;
  GradientField gc = GradientField::create(w, h, pitch);
  for (std::size_t i = 0; i < gc.gx.size(); ++i) {
    gc.gx[i] = a * g1.gx[i] + b * g2.gx[i];
    gc.gy[i] = a * g1.gy[i] + b * g2.gy[i];
  }
  DepthMap z1 = poisson::integrate(g1);
  DepthMap z2 = poisson::integrate(g2);
  DepthMap zc = poisson::integrate(gc);
  double err = 0.0;
  for (std::size_t i = 0; i < zc.z.size(); ++i) {
    err = std::max(err, std::abs(zc.z[i] - a * z1.z[i] - b * z2.z[i]));
  }
  CHECK(err < 1e-6);

  // On arbitrary smooth fields linearity holds modulo the gauge constant.
  Paraboloid pa(w, h, pitch, 40.0), pb(w, h, pitch, -25.0);
  GradientField ga = paraboloid_field(pa), gb = paraboloid_field(pb);
  GradientField gmix = GradientField::create(w, h, pitch);
  for (std::size_t i = 0; i < gmix.gx.size(); ++i) {
    gmix.gx[i] = 0.5 * ga.gx[i] + 2.0 * gb.gx[i];
    gmix.gy[i] = 0.5 * ga.gy[i] + 2.0 * gb.gy[i];
  }
  DepthMap za = poisson::integrate(ga), zb = poisson::integrate(gb);
  DepthMap zmix = poisson::integrate(gmix);
  std::vector<double> lin(zmix.z.size());
  for (std::size_t i = 0; i < lin.size(); ++i) lin[i] = 0.5 * za.z[i] + 2.0 * zb.z[i];
  CHECK(max_error_mod_constant(zmix.z, lin) < 1e-6);
}

TEST_CASE("round trip: conservative fields reproduce their gradients") {
  // Linear depth -> constant gradient: exact everywhere.
  int w = 40, h = 30;
  double pitch = 0.05;
  GradientField g = GradientField::create(w, h, pitch);
  for (auto& v : g.gx) v = 0.31;
  for (auto& v : g.gy) v = -0.12;
  DepthMap d = poisson::integrate(g);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      CHECK(std::abs((d.at(x + 1, y) - d.at(x, y)) / pitch - 0.31) < 1e-9);
    }
  }

  // Quadratic: central differences match at interior pixels.
  Paraboloid p(64, 64, 0.05, 80.0);
  GradientField gp = paraboloid_field(p);
  DepthMap dp = poisson::integrate(gp);
  for (int y = 2; y < p.h - 2; ++y) {
    for (int x = 2; x < p.w - 2; ++x) {
      double gx = (dp.at(x + 1, y) - dp.at(x - 1, y)) / (2.0 * p.pitch);
      double gy = (dp.at(x, y + 1) - dp.at(x, y - 1)) / (2.0 * p.pitch);
      CHECK(std::abs(gx - gp.x(x, y)) < 1e-6);
      CHECK(std::abs(gy - gp.y(x, y)) < 1e-6);
    }
  }
}

TEST_CASE("integrate rejects non-finite input") {
  GradientField g = GradientField::create(8, 8, 0.05);
  g.gx[10] = std::nan("");
  CHECK_THROWS(poisson::integrate(g));
}

TEST_CASE("depth_to_map: flat grid has vertical normals and full point count") {
  DepthMap d = DepthMap::create(17, 11, 0.05);
  for (auto& z : d.z) z = 0.4;
  LocalTactileMap m = poisson::depth_to_map(d, 3);
  CHECK(m.points.size() == 17u * 11u);
  CHECK(m.frame_id == 3);
  REQUIRE(m.has_normals());
  for (const auto& n : m.normals) {
    CHECK((n - Eigen::Vector3d::UnitZ()).norm() < 1e-12);
  }
}

TEST_CASE("depth_to_map: hemisphere normals within 2 degrees of analytic") {
  int w = 120, h = 120;
  double pitch = 0.05, radius = 20.0;
  double cx = 0.5 * (w - 1) * pitch, cy = 0.5 * (h - 1) * pitch;
  double cap = 2.5;  // mm of sphere cap above the base plane
  DepthMap d = DepthMap::create(w, h, pitch);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx = x * pitch - cx, dy = y * pitch - cy;
      double rho2 = dx * dx + dy * dy;
      double zc = radius - cap;  // sphere center depth below base
      double val = (rho2 < radius * radius) ? std::sqrt(radius * radius - rho2) - zc : 0.0;
      d.at(x, y) = std::max(0.0, val);
    }
  }
  LocalTactileMap m = poisson::depth_to_map(d);
  double rho_max = std::sqrt(radius * radius - (radius - cap) * (radius - cap));
  int checked = 0;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      double dx = x * pitch - cx, dy = y * pitch - cy;
      double rho = std::hypot(dx, dy);
      if (rho > 0.8 * rho_max) continue;  // stay clear of the contact crease
      double wz = std::sqrt(radius * radius - rho * rho);
      Eigen::Vector3d analytic(dx / wz, dy / wz, 1.0);
      analytic.normalize();
      const Eigen::Vector3d& n = m.normals[static_cast<std::size_t>(y) * w + x];
      double angle = std::acos(std::min(1.0, n.dot(analytic))) * 180.0 / M_PI;
      CHECK(angle < 2.0);
      ++checked;
    }
  }
  CHECK(checked > 1000);
}
