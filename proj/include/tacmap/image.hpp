#pragma once

#include <vector>

namespace tacmap {

// Default metric size of one pixel. The sensor image resolution and pitch are
// configurable everywhere; this is only the fallback.
inline constexpr double kDefaultPixelPitch = 0.05;  // mm

// Raw three-channel sensor image, intensities in [0, 1], row-major RGB
// interleaved. pixel_pitch is the physical size of one pixel in mm (square).
struct TactileImage {
  int width = 0;
  int height = 0;
  double pixel_pitch = kDefaultPixelPitch;
  std::vector<float> data;  // size 3 * width * height

  static TactileImage create(int width, int height, double pixel_pitch);

  float at(int x, int y, int c) const { return data[3 * (y * width + x) + c]; }
  float& at(int x, int y, int c) { return data[3 * (y * width + x) + c]; }

  void validate() const;  // throws on invariant violation
};

// Per-pixel surface gradient (dz/dx, dz/dy), dimensionless slope.
struct GradientField {
  int width = 0;
  int height = 0;
  double pixel_pitch = kDefaultPixelPitch;
  std::vector<double> gx;  // size width * height, row-major
  std::vector<double> gy;

  static GradientField create(int width, int height, double pixel_pitch);

  double& x(int x_, int y_) { return gx[y_ * width + x_]; }
  double& y(int x_, int y_) { return gy[y_ * width + x_]; }
  double x(int x_, int y_) const { return gx[y_ * width + x_]; }
  double y(int x_, int y_) const { return gy[y_ * width + x_]; }

  void validate() const;
};

// Integrated depth grid, mm, same shape as the gradient field it came from.
struct DepthMap {
  int width = 0;
  int height = 0;
  double pixel_pitch = kDefaultPixelPitch;
  std::vector<double> z;  // row-major

  static DepthMap create(int width, int height, double pixel_pitch);

  double& at(int x, int y) { return z[y * width + x]; }
  double at(int x, int y) const { return z[y * width + x]; }

  void validate() const;
};

}  // namespace tacmap
