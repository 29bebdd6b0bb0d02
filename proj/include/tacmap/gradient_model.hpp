#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "tacmap/image.hpp"

namespace tacmap::gm {

// One training vector: background-rebased color (and pixel coordinates
// normalized to [0,1]) mapped to the surface gradient at that pixel. All five
// features are stored; models trained without coordinates use the first
// three.
struct PixelSample {
  Eigen::Matrix<double, 5, 1> input;  // r, g, b, u, v
  Eigen::Vector2d target;             // gx, gy
};

enum class Activation { kTanh, kLinear };

std::string activation_name(Activation a);
Activation activation_from_name(const std::string& name);

// Small dense MLP, weights (out x in) per layer, evaluated column-batched.
struct MlpModel {
  std::vector<int> layer_sizes;  // e.g. {5, 64, 64, 2}
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  std::vector<Activation> activations;  // one per layer transition

  int input_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.front(); }
  int output_dim() const { return layer_sizes.empty() ? 0 : layer_sizes.back(); }

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;
  // One sample per column.
  Eigen::MatrixXd forward_batch(const Eigen::MatrixXd& x) const;

  void validate() const;

  std::string to_json() const;
  static MlpModel from_json(const std::string& text);
  void save(const std::string& path) const;
  static MlpModel load(const std::string& path);
};

struct TrainConfig {
  double learning_rate = 0.00112;
  int batch_size = 4000;
  int epochs = 400;
  int patience = 20;          // early stop after this many epochs without val improvement
  double val_split = 0.1;
  bool include_coords = true; // 5 inputs when true, 3 otherwise
  std::vector<int> hidden = {64, 64};
  double max_val_mse = 0.0;   // > 0: throw if the final validation MSE exceeds it
  std::uint64_t seed = 1;
};

struct TrainReport {
  int epochs_run = 0;
  double first_epoch_loss = 0.0;
  double final_epoch_loss = 0.0;
  double best_val_mse = 0.0;
  std::vector<double> epoch_loss;
  std::vector<double> val_mse;
};

// Adam-trained MLP with a held-out validation split and plateau early
// stopping; deterministic for a fixed seed. Throws on fewer than 1000
// samples or when the loss turns non-finite.
MlpModel train(const std::vector<PixelSample>& samples, const TrainConfig& config,
               TrainReport* report = nullptr);

// Background-rebased feature transform shared by dataset build and
// prediction: clamp01(0.5 + pixel - background).
void pixel_features(const TactileImage& img, const TactileImage& background, int x, int y,
                    Eigen::Matrix<double, 5, 1>* out);

// Per-pixel forward pass over a whole image.
GradientField predict_field(const MlpModel& model, const TactileImage& img,
                            const TactileImage& background);

// Contact-circle label; pressed == false for a blank frame.
struct CircleLabel {
  bool pressed = false;
  Eigen::Vector2d center_px = Eigen::Vector2d::Zero();
  double radius_px = 0.0;
};

struct LabelerConfig {
  double intensity_threshold = 0.02;  // |img - background| per channel
  int min_component_area = 25;        // pixels; smaller blobs are noise
};

// Automatic contact-circle extraction: intensity-deviation mask, connected
// components, least-squares circle through the boundary pixels. Throws when
// more than one imprint is present.
CircleLabel label_sphere_image(const TactileImage& img, const TactileImage& background,
                               const LabelerConfig& config = {});

// Ground-truth gradients of a sphere press from its circle label: the
// spherical cap z = sqrt(R^2 - rho^2) inside the contact circle, zero
// outside. Throws when the contact radius reaches the sphere radius.
GradientField sphere_label_to_gradients(const CircleLabel& label, double sphere_diameter,
                                        int width, int height, double pixel_pitch);

struct DatasetConfig {
  std::size_t target_count = 150000;
  double background_fraction = 0.5;  // fraction of kept pixels from outside the circle
  // The gel falloff band straddling the contact edge matches neither the cap
  // formula nor the flat background; pixels between these two radius
  // fractions are dropped.
  double inner_margin_fraction = 0.9;
  double outer_margin_fraction = 1.25;
  LabelerConfig labeler;
  std::uint64_t seed = 7;
};

// Labeled sphere images -> pixel samples, using the automatic labeler for
// circle extraction and sphere geometry for the targets.
std::vector<PixelSample> build_sphere_dataset(const std::vector<TactileImage>& images,
                                              const TactileImage& background,
                                              double sphere_diameter,
                                              const DatasetConfig& config);

void save_samples(const std::string& path, const std::vector<PixelSample>& samples);
std::vector<PixelSample> load_samples(const std::string& path);

struct AngleFit {
  double slope = 0.0;
  double r2 = 0.0;
  std::size_t count = 0;
};

struct PitchYawEval {
  AngleFit pitch;
  AngleFit yaw;
};

// Zero-intercept fits (predicted = a * truth) of per-pixel pitch and yaw
// angles of the surface normal (n_x, n_y, n_z) with n_z one pixel's physical
// length. Pixels whose true in-plane magnitude vanishes are excluded; yaw,
// defined modulo pi, is unwrapped to the branch nearest the truth.
PitchYawEval evaluate_pitch_yaw(const GradientField& pred, const GradientField& truth,
                                double pixel_pitch);

}  // namespace tacmap::gm
