#include "tacmap/image.hpp"

#include <cmath>
#include <stdexcept>

namespace tacmap {

namespace {
void check_dims(int width, int height, double pixel_pitch) {
  if (width <= 0 || height <= 0) {
    throw std::invalid_argument("image dimensions must be positive");
  }
  if (!(pixel_pitch > 0.0) || !std::isfinite(pixel_pitch)) {
    throw std::invalid_argument("pixel_pitch must be positive and finite");
  }
}
}  // namespace

TactileImage TactileImage::create(int width, int height, double pixel_pitch) {
  check_dims(width, height, pixel_pitch);
  TactileImage img;
  img.width = width;
  img.height = height;
  img.pixel_pitch = pixel_pitch;
  img.data.assign(static_cast<std::size_t>(3) * width * height, 0.0f);
  return img;
}

void TactileImage::validate() const {
  check_dims(width, height, pixel_pitch);
  if (data.size() != static_cast<std::size_t>(3) * width * height) {
    throw std::invalid_argument("TactileImage: data size mismatch");
  }
  for (float v : data) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw std::invalid_argument("TactileImage: intensity outside [0,1]");
    }
  }
}

GradientField GradientField::create(int width, int height, double pixel_pitch) {
  check_dims(width, height, pixel_pitch);
  GradientField g;
  g.width = width;
  g.height = height;
  g.pixel_pitch = pixel_pitch;
  g.gx.assign(static_cast<std::size_t>(width) * height, 0.0);
  g.gy.assign(static_cast<std::size_t>(width) * height, 0.0);
  return g;
}

void GradientField::validate() const {
  check_dims(width, height, pixel_pitch);
  std::size_t n = static_cast<std::size_t>(width) * height;
  if (gx.size() != n || gy.size() != n) {
    throw std::invalid_argument("GradientField: size mismatch");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(gx[i]) || !std::isfinite(gy[i])) {
      throw std::invalid_argument("GradientField: non-finite gradient");
    }
  }
}

DepthMap DepthMap::create(int width, int height, double pixel_pitch) {
  check_dims(width, height, pixel_pitch);
  DepthMap d;
  d.width = width;
  d.height = height;
  d.pixel_pitch = pixel_pitch;
  d.z.assign(static_cast<std::size_t>(width) * height, 0.0);
  return d;
}

void DepthMap::validate() const {
  check_dims(width, height, pixel_pitch);
  if (z.size() != static_cast<std::size_t>(width) * height) {
    throw std::invalid_argument("DepthMap: size mismatch");
  }
  for (double v : z) {
    if (!std::isfinite(v)) {
      throw std::invalid_argument("DepthMap: non-finite depth");
    }
  }
}

}  // namespace tacmap
