#include "tacmap/sim.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "tacmap/io.hpp"
#include "tacmap/rng.hpp"

namespace tacmap::sim {

namespace {

using nlohmann::json;

// Catmull-Rom weights and their derivatives for t in [0, 1].
void catmull_rom(double t, double w[4], double dw[4]) {
  double t2 = t * t, t3 = t2 * t;
  w[0] = -0.5 * t + t2 - 0.5 * t3;
  w[1] = 1.0 - 2.5 * t2 + 1.5 * t3;
  w[2] = 0.5 * t + 2.0 * t2 - 1.5 * t3;
  w[3] = -0.5 * t2 + 0.5 * t3;
  dw[0] = -0.5 + 2.0 * t - 1.5 * t2;
  dw[1] = -5.0 * t + 4.5 * t2;
  dw[2] = 0.5 + 4.0 * t - 4.5 * t2;
  dw[3] = -t + 1.5 * t2;
}

}  // namespace

bool ObjectHeightfield::contains(double x, double y, double margin) const {
  return x >= origin_x + margin && x <= origin_x + extent_x() - margin &&
         y >= origin_y + margin && y <= origin_y + extent_y() - margin;
}

void ObjectHeightfield::validate() const {
  if (nx < 4 || ny < 4) throw std::invalid_argument("heightfield: grid must be at least 4x4");
  if (!(cell_size > 0.0)) throw std::invalid_argument("heightfield: cell_size must be positive");
  if (z.size() != static_cast<std::size_t>(nx) * ny) {
    throw std::invalid_argument("heightfield: size mismatch");
  }
  for (double v : z) {
    if (!std::isfinite(v)) throw std::invalid_argument("heightfield: non-finite height");
  }
}

namespace {

struct BicubicSample {
  double value;
  double dx;
  double dy;
};

BicubicSample sample_bicubic(const ObjectHeightfield& o, double x, double y) {
  double fx = (x - o.origin_x) / o.cell_size;
  double fy = (y - o.origin_y) / o.cell_size;
  int ix = static_cast<int>(std::floor(fx));
  int iy = static_cast<int>(std::floor(fy));
  ix = std::clamp(ix, 0, o.nx - 2);
  iy = std::clamp(iy, 0, o.ny - 2);
  double tx = std::clamp(fx - ix, 0.0, 1.0);
  double ty = std::clamp(fy - iy, 0.0, 1.0);

  double wx[4], dwx[4], wy[4], dwy[4];
  catmull_rom(tx, wx, dwx);
  catmull_rom(ty, wy, dwy);

  auto z_at = [&](int gx, int gy) {
    gx = std::clamp(gx, 0, o.nx - 1);
    gy = std::clamp(gy, 0, o.ny - 1);
    return o.z[static_cast<std::size_t>(gy) * o.nx + gx];
  };

  double value = 0.0, dx = 0.0, dy = 0.0;
  for (int j = 0; j < 4; ++j) {
    double row = 0.0, drow = 0.0;
    for (int i = 0; i < 4; ++i) {
      double zij = z_at(ix - 1 + i, iy - 1 + j);
      row += wx[i] * zij;
      drow += dwx[i] * zij;
    }
    value += wy[j] * row;
    dx += wy[j] * drow;
    dy += dwy[j] * row;
  }
  return {value, dx / o.cell_size, dy / o.cell_size};
}

}  // namespace

double ObjectHeightfield::height(double x, double y) const {
  return sample_bicubic(*this, x, y).value;
}

Eigen::Vector2d ObjectHeightfield::height_gradient(double x, double y) const {
  BicubicSample s = sample_bicubic(*this, x, y);
  return {s.dx, s.dy};
}

namespace {

ObjectHeightfield alloc_field(double extent_x, double extent_y, double cell_size) {
  if (!(cell_size > 0.0) || extent_x < 3.0 * cell_size || extent_y < 3.0 * cell_size) {
    throw std::invalid_argument("heightfield: bad extents");
  }
  ObjectHeightfield o;
  o.cell_size = cell_size;
  o.nx = static_cast<int>(std::round(extent_x / cell_size)) + 1;
  o.ny = static_cast<int>(std::round(extent_y / cell_size)) + 1;
  o.origin_x = 0.0;
  o.origin_y = 0.0;
  o.z.assign(static_cast<std::size_t>(o.nx) * o.ny, 0.0);
  return o;
}

}  // namespace

ObjectHeightfield make_flat(double extent_x, double extent_y, double cell_size, double base_z) {
  ObjectHeightfield o = alloc_field(extent_x, extent_y, cell_size);
  std::fill(o.z.begin(), o.z.end(), base_z);
  return o;
}

ObjectHeightfield make_hemisphere(double sphere_radius, double protrusion, double extent_x,
                                  double extent_y, double cell_size) {
  if (!(protrusion > 0.0) || protrusion >= sphere_radius) {
    throw std::invalid_argument("make_hemisphere: need 0 < protrusion < radius");
  }
  ObjectHeightfield o = alloc_field(extent_x, extent_y, cell_size);
  double cx = 0.5 * o.extent_x(), cy = 0.5 * o.extent_y();
  double sink = sphere_radius - protrusion;  // sphere center depth below the plate
  for (int gy = 0; gy < o.ny; ++gy) {
    for (int gx = 0; gx < o.nx; ++gx) {
      double dx = gx * cell_size - cx, dy = gy * cell_size - cy;
      double rho2 = dx * dx + dy * dy;
      double v = 0.0;
      if (rho2 < sphere_radius * sphere_radius) {
        v = std::max(0.0, std::sqrt(sphere_radius * sphere_radius - rho2) - sink);
      }
      o.z[static_cast<std::size_t>(gy) * o.nx + gx] = v;
    }
  }
  return o;
}

ObjectHeightfield make_embossed_plate(double extent_x, double extent_y, double cell_size,
                                      double relief_height, int mark_count, std::uint64_t seed) {
  if (!(relief_height > 0.0) || mark_count <= 0) {
    throw std::invalid_argument("make_embossed_plate: bad relief parameters");
  }
  ObjectHeightfield o = alloc_field(extent_x, extent_y, cell_size);
  Rng rng(seed);
  struct Mark {
    double cx, cy, sx, sy, cos_t, sin_t, amp;
  };
  std::vector<Mark> marks;
  double margin = 1.5;
  for (int i = 0; i < mark_count; ++i) {
    Mark m;
    m.cx = rng.uniform(margin, extent_x - margin);
    m.cy = rng.uniform(margin, extent_y - margin);
    m.sx = rng.uniform(0.25, 0.8);
    m.sy = rng.uniform(0.25, 0.8);
    double theta = rng.uniform(0.0, M_PI);
    m.cos_t = std::cos(theta);
    m.sin_t = std::sin(theta);
    m.amp = relief_height * rng.uniform(0.6, 1.0);
    marks.push_back(m);
  }
  for (int gy = 0; gy < o.ny; ++gy) {
    for (int gx = 0; gx < o.nx; ++gx) {
      double x = gx * cell_size, y = gy * cell_size;
      double v = 0.0;
      for (const Mark& m : marks) {
        double dx = x - m.cx, dy = y - m.cy;
        double u = dx * m.cos_t + dy * m.sin_t;
        double w = -dx * m.sin_t + dy * m.cos_t;
        double q = 0.5 * (u * u / (m.sx * m.sx) + w * w / (m.sy * m.sy));
        if (q < 12.0) v += m.amp * std::exp(-q);
      }
      o.z[static_cast<std::size_t>(gy) * o.nx + gx] = v;
    }
  }
  return o;
}

ObjectHeightfield load_heightfield(const std::string& png_path, const std::string& json_path) {
  json meta = json::parse(io::read_text_file(json_path));
  int w = 0, h = 0;
  std::vector<std::uint16_t> values = io::load_png16(png_path, &w, &h);
  ObjectHeightfield o;
  o.nx = w;
  o.ny = h;
  o.cell_size = meta.at("cell_size");
  o.origin_x = meta.value("origin_x", 0.0);
  o.origin_y = meta.value("origin_y", 0.0);
  double scale = meta.at("scale");
  double offset = meta.value("offset", 0.0);
  o.z.resize(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) o.z[i] = values[i] * scale + offset;
  o.validate();
  return o;
}

void save_heightfield(const std::string& png_path, const std::string& json_path,
                      const ObjectHeightfield& obj) {
  obj.validate();
  double lo = *std::min_element(obj.z.begin(), obj.z.end());
  double hi = *std::max_element(obj.z.begin(), obj.z.end());
  double scale = std::max(hi - lo, 1e-9) / 65535.0;
  std::vector<std::uint16_t> values(obj.z.size());
  for (std::size_t i = 0; i < obj.z.size(); ++i) {
    values[i] = static_cast<std::uint16_t>(std::lround((obj.z[i] - lo) / scale));
  }
  io::save_png16(png_path, obj.nx, obj.ny, values);
  json meta = {{"cell_size", obj.cell_size}, {"scale", scale},       {"offset", lo},
               {"origin_x", obj.origin_x},   {"origin_y", obj.origin_y}};
  io::write_text_file(json_path, meta.dump(2) + "\n");
}

void PressSpec::validate() const {
  if (!(force_level >= 0.5 && force_level <= 2.0)) {
    throw std::invalid_argument("PressSpec: force_level outside [0.5, 2.0]");
  }
}

double SensorProfile::arc_radius(double force_level) const {
  const auto& a = arc_radius_anchors;
  if (force_level <= a.front().first) {
    double slope = (a[1].second - a[0].second) / (a[1].first - a[0].first);
    return std::max(1.0, a[0].second + slope * (force_level - a[0].first));
  }
  for (std::size_t i = 1; i < a.size(); ++i) {
    if (force_level <= a[i].first) {
      double t = (force_level - a[i - 1].first) / (a[i].first - a[i - 1].first);
      return a[i - 1].second + t * (a[i].second - a[i - 1].second);
    }
  }
  std::size_t n = a.size();
  double slope = (a[n - 1].second - a[n - 2].second) / (a[n - 1].first - a[n - 2].first);
  return std::max(1.0, a[n - 1].second + slope * (force_level - a[n - 1].first));
}

int SensorProfile::derived_partition_outer() const {
  if (partition_outer_px > 0) return partition_outer_px;
  return static_cast<int>(std::round(0.625 * 0.5 * std::min(width, height)));
}

int SensorProfile::derived_partition_inner() const {
  if (partition_inner_px > 0) return partition_inner_px;
  return static_cast<int>(std::round(derived_partition_outer() * 110.0 / 150.0));
}

void SensorProfile::validate() const {
  if (width < 16 || height < 16) throw std::invalid_argument("SensorProfile: image too small");
  if (!(pixel_pitch > 0.0)) throw std::invalid_argument("SensorProfile: pixel_pitch <= 0");
  if (arc_radius_anchors.size() < 2) {
    throw std::invalid_argument("SensorProfile: need at least 2 arc anchors");
  }
  for (std::size_t i = 1; i < arc_radius_anchors.size(); ++i) {
    if (!(arc_radius_anchors[i].first > arc_radius_anchors[i - 1].first)) {
      throw std::invalid_argument("SensorProfile: anchor forces must increase");
    }
    if (!(arc_radius_anchors[i].second < arc_radius_anchors[i - 1].second)) {
      throw std::invalid_argument("SensorProfile: arc radius must strictly decrease with force");
    }
  }
  if (arc_radius_anchors.back().second <= 0.0) {
    throw std::invalid_argument("SensorProfile: arc radii must be positive");
  }
  if (depth_noise_sigma < 0.0) throw std::invalid_argument("SensorProfile: negative noise sigma");
  if (!(shading_gain > 0.0)) throw std::invalid_argument("SensorProfile: shading gain <= 0");
  if (partition_outer_px > 0 && partition_inner_px >= partition_outer_px) {
    throw std::invalid_argument("SensorProfile: partition inner radius must be below outer");
  }
}

PoseSE3 press_pose(const SensorProfile& prof, double center_x, double center_y, double plane_z,
                   double yaw_rad, double tilt_x_rad, double tilt_y_rad) {
  Eigen::Matrix3d r = (Eigen::AngleAxisd(yaw_rad, Eigen::Vector3d::UnitZ()) *
                       Eigen::AngleAxisd(tilt_x_rad, Eigen::Vector3d::UnitX()) *
                       Eigen::AngleAxisd(tilt_y_rad, Eigen::Vector3d::UnitY()))
                          .toRotationMatrix();
  Eigen::Vector3d sensor_center(0.5 * (prof.width - 1) * prof.pixel_pitch,
                                0.5 * (prof.height - 1) * prof.pixel_pitch, 0.0);
  Eigen::Vector3d target(center_x, center_y, plane_z);
  return PoseSE3(r, target - r * sensor_center);
}

namespace {

// Separable 5-tap Gaussian (sigma 1 px) with reflective boundaries, so a
// fully covered neighborhood blurs to exactly 1.
void blur_mask(int w, int h, const std::vector<std::uint8_t>& mask, std::vector<double>& out) {
  static const double raw[5] = {std::exp(-2.0), std::exp(-0.5), 1.0, std::exp(-0.5),
                                std::exp(-2.0)};
  double sum = raw[0] + raw[1] + raw[2] + raw[3] + raw[4];
  double k[5];
  for (int i = 0; i < 5; ++i) k[i] = raw[i] / sum;

  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  auto reflect = [](int i, int n) {
    if (i < 0) return -i;
    if (i >= n) return 2 * n - 2 - i;
    return i;
  };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -2; d <= 2; ++d) {
        acc += k[d + 2] * mask[static_cast<std::size_t>(y) * w + reflect(x + d, w)];
      }
      tmp[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
  out.resize(tmp.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      for (int d = -2; d <= 2; ++d) {
        acc += k[d + 2] * tmp[static_cast<std::size_t>(reflect(y + d, h)) * w + x];
      }
      out[static_cast<std::size_t>(y) * w + x] = acc;
    }
  }
}

// Shared press renderer over any surface with height(x, y) and gradient(x, y).
template <typename Surface>
PressDetail render_surface(const Surface& surf, const PressSpec& spec,
                           const SensorProfile& prof) {
  prof.validate();
  spec.validate();
  int w = prof.width, h = prof.height;
  double pitch = prof.pixel_pitch;
  const Eigen::Matrix3d& rot = spec.pose.rotation();
  if (rot(2, 2) < 0.5) {
    throw std::invalid_argument("render_press: sensor tilted too far from the surface");
  }
  double rzz = rot(2, 2);
  Eigen::Vector3d r0 = rot.col(0), r1 = rot.col(1);
  double cx = 0.5 * (w - 1), cy = 0.5 * (h - 1);
  double arc_r = prof.arc_radius(spec.force_level);

  std::size_t n = static_cast<std::size_t>(w) * h;
  std::vector<double> field(n, 0.0);  // penetration + arc bias where contact
  std::vector<double> gx_a(n, 0.0), gy_a(n, 0.0);
  std::vector<std::uint8_t> contact(n, 0);

  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      std::size_t i = static_cast<std::size_t>(v) * w + u;
      Eigen::Vector3d s(u * pitch, v * pitch, 0.0);
      Eigen::Vector3d wp = spec.pose.apply(s);
      double height = surf.height(wp.x(), wp.y());
      Eigen::Vector2d hg = surf.gradient(wp.x(), wp.y());
      double pen = height - wp.z();
      if (pen <= 0.0) continue;
      contact[i] = 1;
      double delta = pen * rzz;
      double dpen_du = hg.x() * r0.x() + hg.y() * r0.y() - r0.z();
      double dpen_dv = hg.x() * r1.x() + hg.y() * r1.y() - r1.z();
      double gx = rzz * dpen_du;
      double gy = rzz * dpen_dv;
      if (prof.arc_enabled) {
        double du = (u - cx) * pitch, dv = (v - cy) * pitch;
        double rho2 = du * du + dv * dv;
        double wz = std::sqrt(std::max(arc_r * arc_r - rho2, 1e-9));
        delta += wz - arc_r;
        gx += -du / wz;
        gy += -dv / wz;
      }
      field[i] = delta;
      gx_a[i] = gx;
      gy_a[i] = gy;
    }
  }

  std::vector<double> mask;
  blur_mask(w, h, contact, mask);

  DepthMap depth = DepthMap::create(w, h, pitch);
  for (std::size_t i = 0; i < n; ++i) depth.z[i] = mask[i] * field[i];

  auto eroded = [&](int u, int v) {
    for (int dv = -2; dv <= 2; ++dv) {
      for (int du = -2; du <= 2; ++du) {
        int uu = std::clamp(u + du, 0, w - 1);
        int vv = std::clamp(v + dv, 0, h - 1);
        if (!contact[static_cast<std::size_t>(vv) * w + uu]) return false;
      }
    }
    return true;
  };

  GradientField g = GradientField::create(w, h, pitch);
  for (int v = 0; v < h; ++v) {
    for (int u = 0; u < w; ++u) {
      std::size_t i = static_cast<std::size_t>(v) * w + u;
      if (eroded(u, v)) {
        g.gx[i] = gx_a[i];
        g.gy[i] = gy_a[i];
      } else {
        int u0 = std::max(0, u - 1), u1 = std::min(w - 1, u + 1);
        int v0 = std::max(0, v - 1), v1 = std::min(h - 1, v + 1);
        g.gx[i] = (depth.at(u1, v) - depth.at(u0, v)) / ((u1 - u0) * pitch);
        g.gy[i] = (depth.at(u, v1) - depth.at(u, v0)) / ((v1 - v0) * pitch);
      }
    }
  }

  if (prof.depth_noise_sigma > 0.0) {
    Rng rng = Rng::child(spec.noise_seed, 0x6e6f6973ULL);
    std::vector<double> noise(n);
    for (auto& x : noise) x = rng.normal(0.0, prof.depth_noise_sigma);
    for (std::size_t i = 0; i < n; ++i) depth.z[i] += noise[i];
    for (int v = 0; v < h; ++v) {
      for (int u = 0; u < w; ++u) {
        std::size_t i = static_cast<std::size_t>(v) * w + u;
        int u0 = std::max(0, u - 1), u1 = std::min(w - 1, u + 1);
        int v0 = std::max(0, v - 1), v1 = std::min(h - 1, v + 1);
        g.gx[i] += (noise[static_cast<std::size_t>(v) * w + u1] -
                    noise[static_cast<std::size_t>(v) * w + u0]) /
                   ((u1 - u0) * pitch);
        g.gy[i] += (noise[static_cast<std::size_t>(v1) * w + u] -
                    noise[static_cast<std::size_t>(v0) * w + u]) /
                   ((v1 - v0) * pitch);
      }
    }
  }

  return {std::move(g), std::move(depth), std::move(contact)};
}

struct HeightfieldSurface {
  const ObjectHeightfield& obj;
  double height(double x, double y) const { return obj.height(x, y); }
  Eigen::Vector2d gradient(double x, double y) const { return obj.height_gradient(x, y); }
};

struct SphereSurface {
  double radius;
  double apex_z;
  double height(double x, double y) const {
    double rho2 = x * x + y * y;
    if (rho2 >= radius * radius) return apex_z - radius;
    return apex_z - radius + std::sqrt(radius * radius - rho2);
  }
  Eigen::Vector2d gradient(double x, double y) const {
    double rho2 = x * x + y * y;
    if (rho2 >= 0.98 * radius * radius) return Eigen::Vector2d::Zero();
    double wz = std::sqrt(radius * radius - rho2);
    return {-x / wz, -y / wz};
  }
};

std::vector<Eigen::Vector2d> footprint_polygon(const SensorProfile& prof, const PoseSE3& pose) {
  double ex = (prof.width - 1) * prof.pixel_pitch;
  double ey = (prof.height - 1) * prof.pixel_pitch;
  std::vector<Eigen::Vector3d> corners = {
      {0, 0, 0}, {ex, 0, 0}, {ex, ey, 0}, {0, ey, 0}};
  std::vector<Eigen::Vector2d> poly;
  for (const auto& c : corners) {
    Eigen::Vector3d wp = pose.apply(c);
    poly.emplace_back(wp.x(), wp.y());
  }
  return poly;
}

double polygon_area(const std::vector<Eigen::Vector2d>& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % p.size()];
    acc += a.x() * b.y() - b.x() * a.y();
  }
  return 0.5 * acc;
}

// Sutherland-Hodgman clip of a convex subject by a convex clip polygon (CCW).
std::vector<Eigen::Vector2d> clip_polygon(std::vector<Eigen::Vector2d> subject,
                                          const std::vector<Eigen::Vector2d>& clip) {
  for (std::size_t e = 0; e < clip.size() && !subject.empty(); ++e) {
    const Eigen::Vector2d& a = clip[e];
    const Eigen::Vector2d& b = clip[(e + 1) % clip.size()];
    Eigen::Vector2d edge = b - a;
    auto inside = [&](const Eigen::Vector2d& p) {
      return edge.x() * (p.y() - a.y()) - edge.y() * (p.x() - a.x()) >= 0.0;
    };
    std::vector<Eigen::Vector2d> out;
    for (std::size_t i = 0; i < subject.size(); ++i) {
      const Eigen::Vector2d& cur = subject[i];
      const Eigen::Vector2d& prev = subject[(i + subject.size() - 1) % subject.size()];
      bool cur_in = inside(cur), prev_in = inside(prev);
      if (cur_in != prev_in) {
        Eigen::Vector2d d = cur - prev;
        double denom = edge.x() * d.y() - edge.y() * d.x();
        double num = edge.x() * (prev.y() - a.y()) - edge.y() * (prev.x() - a.x());
        double t = denom != 0.0 ? -num / denom : 0.0;
        out.push_back(prev + std::clamp(t, 0.0, 1.0) * d);
      }
      if (cur_in) out.push_back(cur);
    }
    subject = std::move(out);
  }
  return subject;
}

void ensure_ccw(std::vector<Eigen::Vector2d>& poly) {
  if (polygon_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
}

}  // namespace

PressDetail render_press_detail(const ObjectHeightfield& obj, const PressSpec& spec,
                                const SensorProfile& prof) {
  obj.validate();
  std::vector<Eigen::Vector2d> poly = footprint_polygon(prof, spec.pose);
  double margin = 2.0 * obj.cell_size;
  for (const auto& c : poly) {
    if (!obj.contains(c.x(), c.y(), margin)) {
      throw std::out_of_range("render_press: sensor footprint outside object support");
    }
  }
  return render_surface(HeightfieldSurface{obj}, spec, prof);
}

GradientField render_press(const ObjectHeightfield& obj, const PressSpec& spec,
                           const SensorProfile& prof) {
  return render_press_detail(obj, spec, prof).grad;
}

GradientField render_zero_press(const SensorProfile& prof, std::uint64_t noise_seed) {
  prof.validate();
  // Flat far-away surface: no contact anywhere, the frame is noise only.
  SphereSurface surf{1.0, -100.0};
  PressSpec spec;
  spec.pose = PoseSE3();
  spec.noise_seed = noise_seed;
  return render_surface(surf, spec, prof).grad;
}

TactileImage shade(const GradientField& g, const SensorProfile& prof) {
  g.validate();
  TactileImage img = TactileImage::create(g.width, g.height, g.pixel_pitch);
  constexpr double phis[3] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  double cs[3], sn[3];
  for (int c = 0; c < 3; ++c) {
    cs[c] = std::cos(phis[c]);
    sn[c] = std::sin(phis[c]);
  }
  for (int y = 0; y < g.height; ++y) {
    for (int x = 0; x < g.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        double v = prof.shading_base - prof.shading_gain * (g.x(x, y) * cs[c] + g.y(x, y) * sn[c]);
        img.at(x, y, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

GradientField invert_shading(const TactileImage& img, const SensorProfile& prof) {
  GradientField g = GradientField::create(img.width, img.height, img.pixel_pitch);
  constexpr double phis[3] = {0.0, 2.0 * M_PI / 3.0, 4.0 * M_PI / 3.0};
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      // Least squares over the three channels; sum of cos^2 terms is 3/2.
      double ax = 0.0, ay = 0.0;
      for (int c = 0; c < 3; ++c) {
        double d = (img.at(x, y, c) - prof.shading_base) / prof.shading_gain;
        ax += d * std::cos(phis[c]);
        ay += d * std::sin(phis[c]);
      }
      g.x(x, y) = -ax * 2.0 / 3.0;
      g.y(x, y) = -ay * 2.0 / 3.0;
    }
  }
  return g;
}

std::vector<SphereSample> render_sphere_calibration_set(double sphere_diameter, int count,
                                                        const SensorProfile& prof,
                                                        std::uint64_t seed) {
  if (!(sphere_diameter > 0.0) || count <= 0) {
    throw std::invalid_argument("render_sphere_calibration_set: bad arguments");
  }
  prof.validate();
  double radius = 0.5 * sphere_diameter;
  Rng rng(seed);
  std::vector<SphereSample> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    double pen_max = std::min(0.45, 0.3 * radius);
    double pen = rng.uniform(0.5 * pen_max, pen_max);
    double contact_r = std::sqrt(pen * (2.0 * radius - pen));
    double margin_px = contact_r / prof.pixel_pitch + 8.0;
    if (2.0 * margin_px >= std::min(prof.width, prof.height)) {
      throw std::invalid_argument("render_sphere_calibration_set: sphere too large for sensor");
    }
    double cx = rng.uniform(margin_px, prof.width - 1 - margin_px);
    double cy = rng.uniform(margin_px, prof.height - 1 - margin_px);

    PressSpec spec;
    spec.force_level = prof.standard_force;
    spec.noise_seed = Rng::child(seed, i).next_u64();
    // Sphere apex at world origin; place the sensor so the contact center
    // lands on pixel (cx, cy) with the gel plane pen below the apex.
    spec.pose = PoseSE3(Eigen::Matrix3d::Identity(),
                        Eigen::Vector3d(-cx * prof.pixel_pitch, -cy * prof.pixel_pitch, -pen));
    SphereSurface surf{radius, 0.0};
    PressDetail detail = render_surface(surf, spec, prof);

    SphereSample sample;
    sample.image = shade(detail.grad, prof);
    sample.pressed = true;
    sample.center_px = Eigen::Vector2d(cx, cy);
    sample.radius_px = contact_r / prof.pixel_pitch;
    sample.press_depth = pen;
    out.push_back(std::move(sample));
  }
  return out;
}

double footprint_overlap(const SensorProfile& prof, const PoseSE3& a, const PoseSE3& b) {
  std::vector<Eigen::Vector2d> pa = footprint_polygon(prof, a);
  std::vector<Eigen::Vector2d> pb = footprint_polygon(prof, b);
  ensure_ccw(pa);
  ensure_ccw(pb);
  double area = std::abs(polygon_area(pa));
  std::vector<Eigen::Vector2d> inter = clip_polygon(pa, pb);
  if (inter.size() < 3 || area <= 0.0) return 0.0;
  return std::abs(polygon_area(inter)) / area;
}

TrajectoryRender render_trajectory(const ObjectHeightfield& obj,
                                   const std::vector<PoseSE3>& poses,
                                   const std::vector<double>& forces, const SensorProfile& prof,
                                   std::uint64_t seed, double min_overlap) {
  if (poses.empty()) throw std::invalid_argument("render_trajectory: no poses");
  if (poses.size() != forces.size()) {
    throw std::invalid_argument("render_trajectory: poses/forces length mismatch");
  }
  for (std::size_t k = 0; k + 1 < poses.size(); ++k) {
    double ov = footprint_overlap(prof, poses[k], poses[k + 1]);
    if (ov < min_overlap) {
      throw std::invalid_argument("render_trajectory: frames " + std::to_string(k) + " and " +
                                  std::to_string(k + 1) + " overlap " + std::to_string(ov) +
                                  ", below the minimum " + std::to_string(min_overlap));
    }
  }
  TrajectoryRender out;
  out.ground_truth = poses;
  out.frames.reserve(poses.size());
  for (std::size_t k = 0; k < poses.size(); ++k) {
    PressSpec spec;
    spec.pose = poses[k];
    spec.force_level = forces[k];
    spec.noise_seed = Rng::child(seed, k).next_u64();
    out.frames.push_back(render_press(obj, spec, prof));
  }
  return out;
}

}  // namespace tacmap::sim
