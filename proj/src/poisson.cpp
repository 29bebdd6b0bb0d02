#include "tacmap/poisson.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace tacmap::poisson {

namespace {

// Right-hand side of the normal equations (D_x^T D_x + D_y^T D_y) z = b.
// Cell-centered gradients are averaged onto edges (midpoint rule), which makes
// the discrete minimizer exact for quadratic surfaces, then divergence is
// taken as D^T of the edge values. Gradients are dimensionless, so edge
// differences are scaled by the pixel pitch to get z in mm.
std::vector<double> divergence_rhs(const GradientField& g) {
  int w = g.width, h = g.height;
  double pitch = g.pixel_pitch;
  std::vector<double> b(static_cast<std::size_t>(w) * h, 0.0);
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      double e = 0.5 * (g.x(x, y) + g.x(x + 1, y)) * pitch;
      b[idx(x, y)] -= e;
      b[idx(x + 1, y)] += e;
    }
  }
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double e = 0.5 * (g.y(x, y) + g.y(x, y + 1)) * pitch;
      b[idx(x, y)] -= e;
      b[idx(x, y + 1)] += e;
    }
  }
  return b;
}

// A z for the same normal equations; used for the residual check.
std::vector<double> apply_laplacian(const DepthMap& d) {
  int w = d.width, h = d.height;
  std::vector<double> out(static_cast<std::size_t>(w) * h, 0.0);
  auto idx = [w](int x, int y) { return static_cast<std::size_t>(y) * w + x; };
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x + 1 < w; ++x) {
      double dz = d.at(x + 1, y) - d.at(x, y);
      out[idx(x, y)] -= dz;
      out[idx(x + 1, y)] += dz;
    }
  }
  for (int y = 0; y + 1 < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dz = d.at(x, y + 1) - d.at(x, y);
      out[idx(x, y)] -= dz;
      out[idx(x, y + 1)] += dz;
    }
  }
  return out;
}

// Shift z so the median over the background (lowest-decile gradient
// magnitude) is zero.
void anchor_background(const GradientField& g, DepthMap& d) {
  std::size_t n = d.z.size();
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::hypot(g.gx[i], g.gy[i]);
  std::vector<double> sorted = mag;
  std::size_t k = std::max<std::size_t>(1, n / 10);
  std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
  double threshold = sorted[k - 1];

  std::vector<double> background;
  background.reserve(k);
  for (std::size_t i = 0; i < n; ++i) {
    if (mag[i] <= threshold) background.push_back(d.z[i]);
  }
  std::size_t mid = background.size() / 2;
  std::nth_element(background.begin(), background.begin() + mid, background.end());
  double median = background[mid];
  if (background.size() % 2 == 0) {
    double lower = *std::max_element(background.begin(), background.begin() + mid);
    median = 0.5 * (median + lower);
  }
  for (double& z : d.z) z -= median;
}

}  // namespace

DepthMap integrate(const GradientField& g) {
  g.validate();
  int w = g.width, h = g.height;
  if (w < 2 || h < 2) throw std::invalid_argument("integrate: grid must be at least 2x2");

  std::vector<double> b = divergence_rhs(g);
  std::vector<double> spectrum(b.size());

  // DCT-II diagonalizes the Neumann Laplacian: eigenvalues 4 sin^2(pi k / 2n).
  fftw_plan forward = fftw_plan_r2r_2d(h, w, b.data(), spectrum.data(), FFTW_REDFT10,
                                       FFTW_REDFT10, FFTW_ESTIMATE);
  fftw_execute(forward);
  fftw_destroy_plan(forward);

  std::vector<double> lx(w), ly(h);
  for (int x = 0; x < w; ++x) {
    double s = std::sin(0.5 * M_PI * x / w);
    lx[x] = 4.0 * s * s;
  }
  for (int y = 0; y < h; ++y) {
    double s = std::sin(0.5 * M_PI * y / h);
    ly[y] = 4.0 * s * s;
  }
  double scale = 1.0 / (4.0 * w * h);  // REDFT01(REDFT10(x)) = 4*w*h * x
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      std::size_t i = static_cast<std::size_t>(y) * w + x;
      double lambda = lx[x] + ly[y];
      spectrum[i] = (lambda > 0.0) ? spectrum[i] / lambda * scale : 0.0;
    }
  }

  DepthMap d = DepthMap::create(w, h, g.pixel_pitch);
  fftw_plan backward = fftw_plan_r2r_2d(h, w, spectrum.data(), d.z.data(), FFTW_REDFT01,
                                        FFTW_REDFT01, FFTW_ESTIMATE);
  fftw_execute(backward);
  fftw_destroy_plan(backward);

  anchor_background(g, d);
  return d;
}

double integration_residual(const GradientField& g, const DepthMap& z) {
  if (g.width != z.width || g.height != z.height) {
    throw std::invalid_argument("integration_residual: shape mismatch");
  }
  std::vector<double> b = divergence_rhs(g);
  std::vector<double> az = apply_laplacian(z);
  double num = 0.0, den = 1e-30;
  for (std::size_t i = 0; i < b.size(); ++i) {
    num = std::max(num, std::abs(az[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / den;
}

LocalTactileMap depth_to_map(const DepthMap& d, int frame_id) {
  d.validate();
  LocalTactileMap m;
  m.frame_id = frame_id;
  m.grid_width = d.width;
  m.grid_height = d.height;
  m.pixel_pitch = d.pixel_pitch;
  m.points.reserve(d.z.size());
  for (int y = 0; y < d.height; ++y) {
    for (int x = 0; x < d.width; ++x) {
      m.points.emplace_back(x * d.pixel_pitch, y * d.pixel_pitch, d.at(x, y));
    }
  }
  recompute_grid_normals(m);
  return m;
}

}  // namespace tacmap::poisson
