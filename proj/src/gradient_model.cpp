#include "tacmap/gradient_model.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <stdexcept>

#include "tacmap/io.hpp"
#include "tacmap/rng.hpp"

namespace tacmap::gm {

using nlohmann::json;

std::string activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "linear";
}

Activation activation_from_name(const std::string& name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "linear") return Activation::kLinear;
  throw std::invalid_argument("unknown activation: " + name);
}

void MlpModel::validate() const {
  if (layer_sizes.size() < 2) throw std::invalid_argument("MlpModel: need at least 2 layers");
  std::size_t transitions = layer_sizes.size() - 1;
  if (weights.size() != transitions || biases.size() != transitions ||
      activations.size() != transitions) {
    throw std::invalid_argument("MlpModel: layer count mismatch");
  }
  for (std::size_t i = 0; i < transitions; ++i) {
    if (weights[i].rows() != layer_sizes[i + 1] || weights[i].cols() != layer_sizes[i]) {
      throw std::invalid_argument("MlpModel: weight shape mismatch");
    }
    if (biases[i].size() != layer_sizes[i + 1]) {
      throw std::invalid_argument("MlpModel: bias shape mismatch");
    }
    if (!weights[i].allFinite() || !biases[i].allFinite()) {
      throw std::invalid_argument("MlpModel: non-finite parameters");
    }
  }
}

Eigen::MatrixXd MlpModel::forward_batch(const Eigen::MatrixXd& x) const {
  if (x.rows() != input_dim()) throw std::invalid_argument("MlpModel: input arity mismatch");
  Eigen::MatrixXd a = x;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Eigen::MatrixXd z = (weights[i] * a).colwise() + biases[i];
    a = (activations[i] == Activation::kTanh) ? z.array().tanh().matrix() : std::move(z);
  }
  return a;
}

Eigen::VectorXd MlpModel::forward(const Eigen::VectorXd& x) const {
  return forward_batch(x);
}

std::string MlpModel::to_json() const {
  json j;
  j["layer_sizes"] = layer_sizes;
  json acts = json::array();
  for (Activation a : activations) acts.push_back(activation_name(a));
  j["activations"] = acts;
  json layers = json::array();
  for (std::size_t i = 0; i < weights.size(); ++i) {
    std::vector<double> w(weights[i].size());
    // row-major storage in the file
    for (int r = 0; r < weights[i].rows(); ++r) {
      for (int c = 0; c < weights[i].cols(); ++c) {
        w[static_cast<std::size_t>(r) * weights[i].cols() + c] = weights[i](r, c);
      }
    }
    std::vector<double> b(biases[i].data(), biases[i].data() + biases[i].size());
    layers.push_back({{"weights", w}, {"bias", b}});
  }
  j["layers"] = layers;
  return j.dump();
}

MlpModel MlpModel::from_json(const std::string& text) {
  json j = json::parse(text);
  MlpModel m;
  m.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  for (const auto& name : j.at("activations")) {
    m.activations.push_back(activation_from_name(name.get<std::string>()));
  }
  const json& layers = j.at("layers");
  for (std::size_t i = 0; i + 1 < m.layer_sizes.size(); ++i) {
    int rows = m.layer_sizes[i + 1], cols = m.layer_sizes[i];
    auto w = layers.at(i).at("weights").get<std::vector<double>>();
    auto b = layers.at(i).at("bias").get<std::vector<double>>();
    if (w.size() != static_cast<std::size_t>(rows) * cols ||
        b.size() != static_cast<std::size_t>(rows)) {
      throw std::invalid_argument("MlpModel: stored layer shape mismatch");
    }
    Eigen::MatrixXd wm(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) wm(r, c) = w[static_cast<std::size_t>(r) * cols + c];
    }
    m.weights.push_back(std::move(wm));
    m.biases.push_back(Eigen::Map<Eigen::VectorXd>(b.data(), rows));
  }
  m.validate();
  return m;
}

void MlpModel::save(const std::string& path) const { io::write_text_file(path, to_json()); }

MlpModel MlpModel::load(const std::string& path) {
  return from_json(io::read_text_file(path));
}

namespace {

struct AdamState {
  std::vector<Eigen::MatrixXd> mw, vw;
  std::vector<Eigen::VectorXd> mb, vb;
  double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  long step = 0;
};

double validation_mse(const MlpModel& model, const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
  Eigen::MatrixXd pred = model.forward_batch(x);
  return (pred - y).squaredNorm() / static_cast<double>(y.size());
}

}  // namespace

MlpModel train(const std::vector<PixelSample>& samples, const TrainConfig& config,
               TrainReport* report) {
  if (samples.size() < 1000) {
    throw std::invalid_argument("train: need at least 1000 samples, got " +
                                std::to_string(samples.size()));
  }
  if (config.batch_size <= 0 || config.epochs <= 0 || !(config.learning_rate > 0.0)) {
    throw std::invalid_argument("train: bad config");
  }
  int in_dim = config.include_coords ? 5 : 3;

  Rng rng(config.seed);
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  rng.shuffle(order);
  std::size_t val_count = std::max<std::size_t>(1, static_cast<std::size_t>(
                                                       std::lround(config.val_split * samples.size())));
  std::size_t train_count = samples.size() - val_count;
  if (train_count == 0) throw std::invalid_argument("train: validation split leaves no data");

  Eigen::MatrixXd x_train(in_dim, train_count), y_train(2, train_count);
  Eigen::MatrixXd x_val(in_dim, val_count), y_val(2, val_count);
  for (std::size_t i = 0; i < train_count; ++i) {
    x_train.col(i) = samples[order[i]].input.head(in_dim);
    y_train.col(i) = samples[order[i]].target;
  }
  for (std::size_t i = 0; i < val_count; ++i) {
    x_val.col(i) = samples[order[train_count + i]].input.head(in_dim);
    y_val.col(i) = samples[order[train_count + i]].target;
  }

  MlpModel model;
  model.layer_sizes.push_back(in_dim);
  for (int hsz : config.hidden) model.layer_sizes.push_back(hsz);
  model.layer_sizes.push_back(2);
  std::size_t transitions = model.layer_sizes.size() - 1;
  for (std::size_t i = 0; i < transitions; ++i) {
    int rows = model.layer_sizes[i + 1], cols = model.layer_sizes[i];
    double limit = std::sqrt(6.0 / (rows + cols));
    Eigen::MatrixXd w(rows, cols);
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) w(r, c) = rng.uniform(-limit, limit);
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Eigen::VectorXd::Zero(rows));
    model.activations.push_back(i + 1 == transitions ? Activation::kLinear : Activation::kTanh);
  }

  AdamState adam;
  for (std::size_t i = 0; i < transitions; ++i) {
    adam.mw.push_back(Eigen::MatrixXd::Zero(model.weights[i].rows(), model.weights[i].cols()));
    adam.vw.push_back(adam.mw.back());
    adam.mb.push_back(Eigen::VectorXd::Zero(model.biases[i].size()));
    adam.vb.push_back(adam.mb.back());
  }

  TrainReport local;
  TrainReport& rep = report ? *report : local;
  rep = TrainReport{};

  std::vector<std::size_t> perm(train_count);
  std::iota(perm.begin(), perm.end(), 0);

  MlpModel best = model;
  double best_val = std::numeric_limits<double>::infinity();
  int epochs_since_best = 0;

  std::vector<Eigen::MatrixXd> acts(transitions + 1);   // layer outputs
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(perm);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < train_count; start += config.batch_size) {
      std::size_t count = std::min<std::size_t>(config.batch_size, train_count - start);
      Eigen::MatrixXd xb(in_dim, count), yb(2, count);
      for (std::size_t k = 0; k < count; ++k) {
        xb.col(k) = x_train.col(perm[start + k]);
        yb.col(k) = y_train.col(perm[start + k]);
      }

      acts[0] = xb;
      for (std::size_t i = 0; i < transitions; ++i) {
        Eigen::MatrixXd z = (model.weights[i] * acts[i]).colwise() + model.biases[i];
        acts[i + 1] =
            (model.activations[i] == Activation::kTanh) ? z.array().tanh().matrix() : std::move(z);
      }
      Eigen::MatrixXd delta = acts[transitions] - yb;
      double batch_loss = delta.squaredNorm() / static_cast<double>(delta.size());
      if (!std::isfinite(batch_loss)) {
        throw std::runtime_error("train: loss diverged at epoch " + std::to_string(epoch));
      }
      epoch_loss += batch_loss * static_cast<double>(count);
      delta *= 2.0 / static_cast<double>(delta.size());

      ++adam.step;
      double bc1 = 1.0 - std::pow(adam.beta1, adam.step);
      double bc2 = 1.0 - std::pow(adam.beta2, adam.step);
      for (std::size_t i = transitions; i-- > 0;) {
        if (model.activations[i] == Activation::kTanh) {
          delta = delta.cwiseProduct(
              (1.0 - acts[i + 1].array().square()).matrix());
        }
        Eigen::MatrixXd dw = delta * acts[i].transpose();
        Eigen::VectorXd db = delta.rowwise().sum();
        if (i > 0) delta = model.weights[i].transpose() * delta;

        adam.mw[i] = adam.beta1 * adam.mw[i] + (1.0 - adam.beta1) * dw;
        adam.vw[i] = adam.beta2 * adam.vw[i] + (1.0 - adam.beta2) * dw.cwiseProduct(dw);
        adam.mb[i] = adam.beta1 * adam.mb[i] + (1.0 - adam.beta1) * db;
        adam.vb[i] = adam.beta2 * adam.vb[i] + (1.0 - adam.beta2) * db.cwiseProduct(db);
        model.weights[i] -=
            (config.learning_rate * (adam.mw[i] / bc1).array() /
             ((adam.vw[i] / bc2).array().sqrt() + adam.eps))
                .matrix();
        model.biases[i] -= (config.learning_rate * (adam.mb[i] / bc1).array() /
                            ((adam.vb[i] / bc2).array().sqrt() + adam.eps))
                               .matrix();
      }
    }
    epoch_loss /= static_cast<double>(train_count);
    rep.epoch_loss.push_back(epoch_loss);

    double val = validation_mse(model, x_val, y_val);
    rep.val_mse.push_back(val);
    if (val < best_val * (1.0 - 1e-6)) {
      best_val = val;
      best = model;
      epochs_since_best = 0;
    } else {
      ++epochs_since_best;
    }
    rep.epochs_run = epoch + 1;
    if (epochs_since_best >= config.patience) break;
  }

  rep.first_epoch_loss = rep.epoch_loss.front();
  rep.final_epoch_loss = rep.epoch_loss.back();
  rep.best_val_mse = best_val;

  if (config.max_val_mse > 0.0 && best_val > config.max_val_mse) {
    throw std::runtime_error("train: validation MSE " + std::to_string(best_val) +
                             " above bound " + std::to_string(config.max_val_mse));
  }
  return best;
}

void pixel_features(const TactileImage& img, const TactileImage& background, int x, int y,
                    Eigen::Matrix<double, 5, 1>* out) {
  for (int c = 0; c < 3; ++c) {
    double v = 0.5 + img.at(x, y, c) - background.at(x, y, c);
    (*out)[c] = std::clamp(v, 0.0, 1.0);
  }
  (*out)[3] = img.width > 1 ? static_cast<double>(x) / (img.width - 1) : 0.0;
  (*out)[4] = img.height > 1 ? static_cast<double>(y) / (img.height - 1) : 0.0;
}

GradientField predict_field(const MlpModel& model, const TactileImage& img,
                            const TactileImage& background) {
  model.validate();
  if (model.input_dim() != 3 && model.input_dim() != 5) {
    throw std::invalid_argument("predict_field: model must take 3 or 5 inputs");
  }
  if (img.width != background.width || img.height != background.height) {
    throw std::invalid_argument("predict_field: background shape mismatch");
  }
  std::size_t n = static_cast<std::size_t>(img.width) * img.height;
  Eigen::MatrixXd x(model.input_dim(), n);
  Eigen::Matrix<double, 5, 1> feat;
  std::size_t i = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int px = 0; px < img.width; ++px, ++i) {
      pixel_features(img, background, px, y, &feat);
      x.col(i) = feat.head(model.input_dim());
    }
  }
  Eigen::MatrixXd out = model.forward_batch(x);
  GradientField g = GradientField::create(img.width, img.height, img.pixel_pitch);
  for (std::size_t k = 0; k < n; ++k) {
    g.gx[k] = out(0, k);
    g.gy[k] = out(1, k);
  }
  return g;
}

CircleLabel label_sphere_image(const TactileImage& img, const TactileImage& background,
                               const LabelerConfig& config) {
  if (img.width != background.width || img.height != background.height) {
    throw std::invalid_argument("label_sphere_image: background shape mismatch");
  }
  int w = img.width, h = img.height;
  std::size_t n = static_cast<std::size_t>(w) * h;
  // Smooth the signed per-channel differences (7x7 mean), so zero-mean
  // sensor noise cancels while the imprint's smooth deviation survives, then
  // threshold the channel-max magnitude.
  auto clampi = [](int v, int lim) { return std::clamp(v, 0, lim - 1); };
  std::vector<double> smooth_max(n, 0.0);
  std::vector<double> chan(n), tmp(n);
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        chan[static_cast<std::size_t>(y) * w + x] =
            static_cast<double>(img.at(x, y, c)) - background.at(x, y, c);
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int d = -3; d <= 3; ++d) {
          acc += chan[static_cast<std::size_t>(y) * w + clampi(x + d, w)];
        }
        tmp[static_cast<std::size_t>(y) * w + x] = acc / 7.0;
      }
    }
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int d = -3; d <= 3; ++d) {
          acc += tmp[static_cast<std::size_t>(clampi(y + d, h)) * w + x];
        }
        std::size_t i = static_cast<std::size_t>(y) * w + x;
        smooth_max[i] = std::max(smooth_max[i], std::abs(acc / 7.0));
      }
    }
  }
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    mask[i] = smooth_max[i] > config.intensity_threshold ? 1 : 0;
  }

  // 8-connected components, ignoring blobs below the noise floor.
  std::vector<int> component(mask.size(), -1);
  std::vector<std::vector<std::size_t>> blobs;
  std::deque<std::size_t> queue;
  for (std::size_t s = 0; s < mask.size(); ++s) {
    if (!mask[s] || component[s] >= 0) continue;
    int id = static_cast<int>(blobs.size());
    blobs.emplace_back();
    component[s] = id;
    queue.push_back(s);
    while (!queue.empty()) {
      std::size_t cur = queue.front();
      queue.pop_front();
      blobs[id].push_back(cur);
      int cy = static_cast<int>(cur) / w, cx = static_cast<int>(cur) % w;
      for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
          int nx = cx + dx, ny = cy + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          std::size_t ni = static_cast<std::size_t>(ny) * w + nx;
          if (mask[ni] && component[ni] < 0) {
            component[ni] = id;
            queue.push_back(ni);
          }
        }
      }
    }
  }
  std::vector<const std::vector<std::size_t>*> substantial;
  for (const auto& blob : blobs) {
    if (static_cast<int>(blob.size()) >= config.min_component_area) substantial.push_back(&blob);
  }
  if (substantial.empty()) return {};  // blank frame, valid empty label
  std::sort(substantial.begin(), substantial.end(),
            [](const auto* a, const auto* b) { return a->size() > b->size(); });
  if (substantial.size() > 1 &&
      substantial[1]->size() >= std::max<std::size_t>(config.min_component_area,
                                                      substantial[0]->size() / 5)) {
    throw std::runtime_error("label_sphere_image: multiple imprints detected");
  }

  // Boundary pixels of the imprint, then a least-squares (algebraic) circle.
  const auto& blob = *substantial.front();
  std::vector<Eigen::Vector2d> boundary;
  for (std::size_t idx : blob) {
    int cy = static_cast<int>(idx) / w, cx = static_cast<int>(idx) % w;
    bool edge = false;
    const int nx4[4] = {cx - 1, cx + 1, cx, cx};
    const int ny4[4] = {cy, cy, cy - 1, cy + 1};
    for (int k = 0; k < 4 && !edge; ++k) {
      if (nx4[k] < 0 || ny4[k] < 0 || nx4[k] >= w || ny4[k] >= h) {
        edge = true;
      } else if (!mask[static_cast<std::size_t>(ny4[k]) * w + nx4[k]]) {
        edge = true;
      }
    }
    if (edge) boundary.emplace_back(cx, cy);
  }
  if (boundary.size() < 8) throw std::runtime_error("label_sphere_image: imprint too small");

  auto fit_circle = [](const std::vector<Eigen::Vector2d>& pts) {
    Eigen::Matrix3d ata = Eigen::Matrix3d::Zero();
    Eigen::Vector3d atb = Eigen::Vector3d::Zero();
    for (const auto& p : pts) {
      Eigen::Vector3d row(2.0 * p.x(), 2.0 * p.y(), 1.0);
      ata += row * row.transpose();
      atb += row * p.squaredNorm();
    }
    Eigen::Vector3d sol = ata.ldlt().solve(atb);
    CircleLabel label;
    label.pressed = true;
    label.center_px = sol.head<2>();
    label.radius_px = std::sqrt(std::max(0.0, sol[2] + sol.head<2>().squaredNorm()));
    return label;
  };
  CircleLabel coarse = fit_circle(boundary);

  // The mask edge sits a few pixels outside the contact circle (gel falloff
  // plus the smoothing above). Both spread symmetrically, so the contact edge
  // is where the deviation profile drops to half its per-ray peak; re-fit the
  // circle through those subpixel crossings.
  auto sample_smooth = [&](double x, double y) {
    int x0 = clampi(static_cast<int>(std::floor(x)), w - 1);
    int y0 = clampi(static_cast<int>(std::floor(y)), h - 1);
    int x1 = clampi(x0 + 1, w), y1 = clampi(y0 + 1, h);
    double tx = std::clamp(x - x0, 0.0, 1.0), ty = std::clamp(y - y0, 0.0, 1.0);
    auto at = [&](int xx, int yy) { return smooth_max[static_cast<std::size_t>(yy) * w + xx]; };
    return (1 - ty) * ((1 - tx) * at(x0, y0) + tx * at(x1, y0)) +
           ty * ((1 - tx) * at(x0, y1) + tx * at(x1, y1));
  };
  std::vector<Eigen::Vector2d> crossings;
  const int rays = 180;
  const double step = 0.25;
  for (int k = 0; k < rays; ++k) {
    double theta = 2.0 * M_PI * k / rays;
    Eigen::Vector2d dir(std::cos(theta), std::sin(theta));
    double r_lo = std::max(1.0, coarse.radius_px - 10.0);
    double r_hi = coarse.radius_px + 6.0;
    double peak = 0.0;
    for (double r = r_lo; r <= r_hi; r += step) {
      Eigen::Vector2d p = coarse.center_px + r * dir;
      if (p.x() < 0 || p.y() < 0 || p.x() > w - 1 || p.y() > h - 1) break;
      peak = std::max(peak, sample_smooth(p.x(), p.y()));
    }
    if (peak < config.intensity_threshold) continue;
    double half = 0.5 * peak;
    double prev_r = r_lo, prev_v = sample_smooth((coarse.center_px + r_lo * dir).x(),
                                                 (coarse.center_px + r_lo * dir).y());
    bool seen_peak = prev_v >= half;
    for (double r = r_lo + step; r <= r_hi; r += step) {
      Eigen::Vector2d p = coarse.center_px + r * dir;
      if (p.x() < 0 || p.y() < 0 || p.x() > w - 1 || p.y() > h - 1) break;
      double v = sample_smooth(p.x(), p.y());
      if (v >= half) seen_peak = true;
      if (seen_peak && prev_v >= half && v < half) {
        double t = (prev_v - half) / std::max(prev_v - v, 1e-12);
        crossings.push_back(coarse.center_px + (prev_r + t * step) * dir);
        break;
      }
      prev_r = r;
      prev_v = v;
    }
  }
  if (crossings.size() < rays / 3) return coarse;  // edge clipped or too faint
  return fit_circle(crossings);
}

GradientField sphere_label_to_gradients(const CircleLabel& label, double sphere_diameter,
                                        int width, int height, double pixel_pitch) {
  GradientField g = GradientField::create(width, height, pixel_pitch);
  if (!label.pressed) return g;
  double sphere_r = 0.5 * sphere_diameter;
  double contact_r = label.radius_px * pixel_pitch;
  if (contact_r >= sphere_r) {
    throw std::invalid_argument("sphere_label_to_gradients: contact circle exceeds the sphere");
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      double dx = (x - label.center_px.x()) * pixel_pitch;
      double dy = (y - label.center_px.y()) * pixel_pitch;
      double rho2 = dx * dx + dy * dy;
      if (rho2 >= contact_r * contact_r) continue;
      double wz = std::sqrt(sphere_r * sphere_r - rho2);
      g.x(x, y) = -dx / wz;
      g.y(x, y) = -dy / wz;
    }
  }
  return g;
}

std::vector<PixelSample> build_sphere_dataset(const std::vector<TactileImage>& images,
                                              const TactileImage& background,
                                              double sphere_diameter,
                                              const DatasetConfig& config) {
  if (images.empty()) throw std::invalid_argument("build_sphere_dataset: no images");
  Rng rng(config.seed);
  std::vector<PixelSample> inside, outside;
  Eigen::Matrix<double, 5, 1> feat;
  for (const auto& img : images) {
    CircleLabel label = label_sphere_image(img, background, config.labeler);
    GradientField truth =
        sphere_label_to_gradients(label, sphere_diameter, img.width, img.height, img.pixel_pitch);
    for (int y = 0; y < img.height; ++y) {
      for (int x = 0; x < img.width; ++x) {
        double dist = label.pressed
                          ? (Eigen::Vector2d(x, y) - label.center_px).norm()
                          : std::numeric_limits<double>::infinity();
        bool in_circle = dist < config.inner_margin_fraction * label.radius_px;
        bool in_background = dist > config.outer_margin_fraction * label.radius_px;
        if (!in_circle && !in_background) continue;  // falloff band, targets unreliable
        pixel_features(img, background, x, y, &feat);
        PixelSample s;
        s.input = feat;
        s.target = Eigen::Vector2d(truth.x(x, y), truth.y(x, y));
        (in_circle ? inside : outside).push_back(s);
      }
    }
  }
  rng.shuffle(inside);
  rng.shuffle(outside);
  std::size_t want_bg = static_cast<std::size_t>(config.background_fraction * config.target_count);
  std::size_t want_in = config.target_count - std::min(want_bg, config.target_count);
  std::vector<PixelSample> out;
  out.reserve(config.target_count);
  for (std::size_t i = 0; i < inside.size() && out.size() < want_in; ++i) out.push_back(inside[i]);
  for (std::size_t i = 0; i < outside.size() && out.size() < config.target_count; ++i) {
    out.push_back(outside[i]);
  }
  rng.shuffle(out);
  return out;
}

void save_samples(const std::string& path, const std::vector<PixelSample>& samples) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for writing");
  std::uint64_t count = samples.size();
  f.write("TSMP", 4);
  f.write(reinterpret_cast<const char*>(&count), 8);
  for (const auto& s : samples) {
    double row[7] = {s.input[0], s.input[1], s.input[2], s.input[3], s.input[4],
                     s.target[0], s.target[1]};
    f.write(reinterpret_cast<const char*>(row), sizeof(row));
  }
  if (!f) throw std::runtime_error(path + ": write failed");
}

std::vector<PixelSample> load_samples(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error(path + ": cannot open for reading");
  char magic[4];
  std::uint64_t count = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&count), 8);
  if (!f || std::string(magic, 4) != "TSMP") throw std::runtime_error(path + ": not a sample file");
  std::vector<PixelSample> samples(count);
  for (auto& s : samples) {
    double row[7];
    f.read(reinterpret_cast<char*>(row), sizeof(row));
    s.input << row[0], row[1], row[2], row[3], row[4];
    s.target << row[5], row[6];
  }
  if (!f) throw std::runtime_error(path + ": truncated sample file");
  return samples;
}

namespace {

AngleFit zero_intercept_fit(const std::vector<double>& truth, const std::vector<double>& pred) {
  AngleFit fit;
  fit.count = truth.size();
  if (truth.empty()) return fit;
  double stp = 0.0, stt = 0.0, mean_p = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    stp += truth[i] * pred[i];
    stt += truth[i] * truth[i];
    mean_p += pred[i];
  }
  mean_p /= static_cast<double>(pred.size());
  fit.slope = stt > 0.0 ? stp / stt : 0.0;
  double ss_res = 0.0, ss_tot = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    double r = pred[i] - fit.slope * truth[i];
    ss_res += r * r;
    double c = pred[i] - mean_p;
    ss_tot += c * c;
  }
  fit.r2 = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

}  // namespace

PitchYawEval evaluate_pitch_yaw(const GradientField& pred, const GradientField& truth,
                                double pixel_pitch) {
  if (pred.width != truth.width || pred.height != truth.height) {
    throw std::invalid_argument("evaluate_pitch_yaw: shape mismatch");
  }
  std::vector<double> pitch_t, pitch_p, yaw_t, yaw_p;
  double nz = pixel_pitch;
  for (std::size_t i = 0; i < truth.gx.size(); ++i) {
    double tmag = std::hypot(truth.gx[i], truth.gy[i]);
    if (tmag < 1e-8) continue;  // pitch degenerates to 90 degrees, yaw undefined
    double pmag = std::hypot(pred.gx[i], pred.gy[i]);
    // n = (gx * pitch, gy * pitch, pitch)
    pitch_t.push_back(std::atan2(nz, tmag * pixel_pitch));
    pitch_p.push_back(std::atan2(nz, pmag * pixel_pitch));
    if (pmag < 1e-8) continue;
    double yt = std::atan(truth.gy[i] / truth.gx[i]);
    double yp = std::atan(pred.gy[i] / pred.gx[i]);
    yp += M_PI * std::round((yt - yp) / M_PI);  // yaw is defined modulo pi
    yaw_t.push_back(yt);
    yaw_p.push_back(yp);
  }
  PitchYawEval eval;
  eval.pitch = zero_intercept_fit(pitch_t, pitch_p);
  eval.yaw = zero_intercept_fit(yaw_t, yaw_p);
  return eval;
}

}  // namespace tacmap::gm
