#include "tacmap/registration.hpp"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "tacmap/rng.hpp"
#include "tacmap/spatial.hpp"

namespace tacmap::reg {

void RegistrationParams::validate() const {
  if (!(voxel_size > 0.0)) throw std::invalid_argument("registration: voxel_size must be > 0");
  if (!(pitch_threshold_deg > 0.0 && pitch_threshold_deg <= 90.0)) {
    throw std::invalid_argument("registration: pitch threshold must be in (0, 90]");
  }
  if (!(fpfh_radius > 0.0) || !(ransac.inlier_distance > 0.0) ||
      !(icp.max_correspondence_distance > 0.0)) {
    throw std::invalid_argument("registration: radii must be > 0");
  }
  if (normal_knn < 3 || ransac.max_iterations <= 0 || icp.max_iterations <= 0) {
    throw std::invalid_argument("registration: bad iteration/neighbor counts");
  }
}

LocalTactileMap voxel_downsample(const LocalTactileMap& m, double voxel) {
  if (!(voxel > 0.0)) throw std::invalid_argument("voxel_downsample: voxel must be > 0");
  struct Accum {
    Eigen::Vector3d point = Eigen::Vector3d::Zero();
    Eigen::Vector3d normal = Eigen::Vector3d::Zero();
    int count = 0;
  };
  // std::map keeps the output order deterministic.
  std::map<std::tuple<long, long, long>, Accum> cells;
  bool normals = m.has_normals();
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const Eigen::Vector3d& p = m.points[i];
    auto key = std::make_tuple(static_cast<long>(std::floor(p.x() / voxel)),
                               static_cast<long>(std::floor(p.y() / voxel)),
                               static_cast<long>(std::floor(p.z() / voxel)));
    Accum& a = cells[key];
    a.point += p;
    if (normals) a.normal += m.normals[i];
    ++a.count;
  }
  LocalTactileMap out;
  out.frame_id = m.frame_id;
  out.points.reserve(cells.size());
  if (normals) out.normals.reserve(cells.size());
  for (const auto& [key, a] : cells) {
    out.points.push_back(a.point / a.count);
    if (normals) {
      double len = a.normal.norm();
      out.normals.push_back(len > 1e-12 ? Eigen::Vector3d(a.normal / len)
                                        : Eigen::Vector3d::UnitZ());
    }
  }
  return out;
}

void estimate_normals(LocalTactileMap& m, int knn) {
  std::size_t n = m.points.size();
  if (n < 3) throw std::invalid_argument("estimate_normals: need at least 3 points");
  KdTree3 tree(m.points);
  m.normals.assign(n, Eigen::Vector3d::UnitZ());
  std::size_t k = std::min<std::size_t>(knn, n);
  for (std::size_t i = 0; i < n; ++i) {
    auto idx = tree.knn(m.points[i], k);
    Eigen::Vector3d mean = Eigen::Vector3d::Zero();
    for (std::size_t j : idx) mean += m.points[j];
    mean /= static_cast<double>(idx.size());
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (std::size_t j : idx) {
      Eigen::Vector3d d = m.points[j] - mean;
      cov += d * d.transpose();
    }
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(cov);
    Eigen::Vector3d normal = eig.eigenvectors().col(0);
    if (normal.z() < 0.0) normal = -normal;
    m.normals[i] = normal.normalized();
  }
}

namespace {

double normal_pitch_deg(const Eigen::Vector3d& n) {
  return std::atan2(std::abs(n.z()), std::hypot(n.x(), n.y())) * 180.0 / M_PI;
}

}  // namespace

RoiResult extract_roi(const LocalTactileMap& m, double pitch_threshold_deg) {
  if (!m.has_normals()) throw std::invalid_argument("extract_roi: normals required");
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  bool any = false;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    if (normal_pitch_deg(m.normals[i]) < pitch_threshold_deg) {
      lo = lo.cwiseMin(m.points[i]);
      hi = hi.cwiseMax(m.points[i]);
      any = true;
    }
  }
  if (!any) return {m, true};  // textureless frame; caller decides what to do
  RoiResult out;
  out.fallback = false;
  out.map.frame_id = m.frame_id;
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    const Eigen::Vector3d& p = m.points[i];
    if ((p.array() >= lo.array()).all() && (p.array() <= hi.array()).all()) {
      out.map.points.push_back(p);
      out.map.normals.push_back(m.normals[i]);
    }
  }
  return out;
}

FpfhFeatures compute_fpfh(const LocalTactileMap& m, double radius) {
  if (!m.has_normals()) throw std::invalid_argument("compute_fpfh: normals required");
  std::size_t n = m.points.size();
  if (n < 10) throw std::invalid_argument("compute_fpfh: need at least 10 points");

  KdTree3 tree(m.points);
  std::vector<std::vector<std::size_t>> neighborhoods(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = tree.radius(m.points[i], radius);
    std::sort(nb.begin(), nb.end());
    neighborhoods[i] = std::move(nb);
  }

  auto pair_features = [&](std::size_t a, std::size_t b, double* f) {
    Eigen::Vector3d d = m.points[b] - m.points[a];
    double dist = d.norm();
    Eigen::Vector3d ns = m.normals[a], nt = m.normals[b];
    Eigen::Vector3d dir = d / dist;
    // The point whose normal is closer to the connecting line is the source.
    if (std::abs(ns.dot(dir)) < std::abs(nt.dot(dir))) {
      std::swap(ns, nt);
      dir = -dir;
    }
    Eigen::Vector3d u = ns;
    Eigen::Vector3d v = dir.cross(u);
    double vlen = v.norm();
    if (vlen < 1e-12) {
      v = u.unitOrthogonal();
    } else {
      v /= vlen;
    }
    Eigen::Vector3d w = u.cross(v);
    f[0] = v.dot(nt);                          // alpha, [-1, 1]
    f[1] = u.dot(dir);                         // phi, [-1, 1]
    f[2] = std::atan2(w.dot(nt), u.dot(nt));   // theta, [-pi, pi]
  };

  auto bin_of = [](double value, double lo, double hi) {
    int b = static_cast<int>(std::floor((value - lo) / (hi - lo) * 11.0));
    return std::clamp(b, 0, 10);
  };

  Eigen::MatrixXd spfh = Eigen::MatrixXd::Zero(33, n);
  std::vector<std::uint8_t> isolated(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t pairs = 0;
    double f[3];
    for (std::size_t j : neighborhoods[i]) {
      if (j == i) continue;
      if ((m.points[j] - m.points[i]).norm() < 1e-12) continue;
      pair_features(i, j, f);
      spfh(bin_of(f[0], -1.0, 1.0), i) += 1.0;
      spfh(11 + bin_of(f[1], -1.0, 1.0), i) += 1.0;
      spfh(22 + bin_of(f[2], -M_PI, M_PI), i) += 1.0;
      ++pairs;
    }
    if (pairs == 0) {
      isolated[i] = 1;
    } else {
      spfh.col(i) *= 100.0 / static_cast<double>(pairs);  // percentage per block
    }
  }

  FpfhFeatures out;
  out.histograms = Eigen::MatrixXd::Zero(33, n);
  out.isolated = std::move(isolated);
  for (std::size_t i = 0; i < n; ++i) {
    if (out.isolated[i]) continue;
    Eigen::VectorXd acc = spfh.col(i);
    double weight_count = 0.0;
    Eigen::VectorXd nb_acc = Eigen::VectorXd::Zero(33);
    for (std::size_t j : neighborhoods[i]) {
      if (j == i || out.isolated[j]) continue;
      double dist = (m.points[j] - m.points[i]).norm();
      if (dist < 1e-12) continue;
      nb_acc += spfh.col(j) / dist;
      weight_count += 1.0;
    }
    if (weight_count > 0.0) acc += nb_acc / weight_count;
    out.histograms.col(i) = acc;
  }
  return out;
}

namespace {

struct Correspondence {
  std::size_t src;
  std::size_t tgt;
};

std::vector<Correspondence> match_features(const FpfhFeatures& src, const FpfhFeatures& tgt) {
  std::vector<Correspondence> out;
  std::size_t ns = static_cast<std::size_t>(src.histograms.cols());
  std::size_t nt = static_cast<std::size_t>(tgt.histograms.cols());
  for (std::size_t i = 0; i < ns; ++i) {
    if (src.isolated[i]) continue;
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_j = KdTree3::npos;
    for (std::size_t j = 0; j < nt; ++j) {
      if (tgt.isolated[j]) continue;
      double d2 = (src.histograms.col(i) - tgt.histograms.col(j)).squaredNorm();
      if (d2 < best) {
        best = d2;
        best_j = j;
      }
    }
    if (best_j != KdTree3::npos) out.push_back({i, best_j});
  }
  return out;
}

PoseSE3 umeyama_rigid(const Eigen::Matrix3Xd& src, const Eigen::Matrix3Xd& dst) {
  Eigen::Matrix4d t = Eigen::umeyama(src, dst, false);
  return PoseSE3(nearest_rotation(t.topLeftCorner<3, 3>()), t.topRightCorner<3, 1>());
}

}  // namespace

RegistrationResult global_register(const LocalTactileMap& src, const LocalTactileMap& tgt,
                                   const RegistrationParams& params) {
  params.validate();
  RegistrationResult result;
  if (src.points.size() < 10 || tgt.points.size() < 10) return result;

  FpfhFeatures fs = compute_fpfh(src, params.fpfh_radius);
  FpfhFeatures ft = compute_fpfh(tgt, params.fpfh_radius);
  std::vector<Correspondence> corr = match_features(fs, ft);
  if (corr.size() < 3) return result;

  Rng rng(params.seed);
  const double tol = params.ransac.edge_length_tolerance;
  const double inlier_d2 =
      params.ransac.inlier_distance * params.ransac.inlier_distance;

  int best_inliers = -1;
  double best_rmse = std::numeric_limits<double>::infinity();
  PoseSE3 best_t;
  double needed = params.ransac.max_iterations;

  Eigen::Matrix3Xd s3(3, 3), d3(3, 3);
  for (int it = 0; it < params.ransac.max_iterations && it < needed; ++it) {
    std::size_t a = rng.uniform_index(corr.size());
    std::size_t b = rng.uniform_index(corr.size());
    std::size_t c = rng.uniform_index(corr.size());
    if (a == b || b == c || a == c) continue;
    const Correspondence& ca = corr[a];
    const Correspondence& cb = corr[b];
    const Correspondence& cc = corr[c];

    bool ok = true;
    const Correspondence* tri[3] = {&ca, &cb, &cc};
    for (int i = 0; i < 3 && ok; ++i) {
      const auto& p = *tri[i];
      const auto& q = *tri[(i + 1) % 3];
      double ls = (src.points[p.src] - src.points[q.src]).norm();
      double lt = (tgt.points[p.tgt] - tgt.points[q.tgt]).norm();
      if (ls < 0.5 * params.voxel_size || lt < 0.5 * params.voxel_size) ok = false;
      if (ls < tol * lt || lt < tol * ls) ok = false;
    }
    if (!ok) continue;

    for (int i = 0; i < 3; ++i) {
      s3.col(i) = src.points[tri[i]->src];
      d3.col(i) = tgt.points[tri[i]->tgt];
    }
    PoseSE3 t;
    try {
      t = umeyama_rigid(s3, d3);
    } catch (const std::invalid_argument&) {
      continue;
    }

    int inliers = 0;
    double err2 = 0.0;
    for (const auto& cr : corr) {
      double d2 = (t.apply(src.points[cr.src]) - tgt.points[cr.tgt]).squaredNorm();
      if (d2 <= inlier_d2) {
        ++inliers;
        err2 += d2;
      }
    }
    double rmse = inliers > 0 ? std::sqrt(err2 / inliers) : 0.0;
    if (inliers > best_inliers || (inliers == best_inliers && rmse < best_rmse)) {
      best_inliers = inliers;
      best_rmse = rmse;
      best_t = t;
      double ratio = static_cast<double>(inliers) / static_cast<double>(corr.size());
      if (ratio > 0.0) {
        double denom = std::log(1.0 - std::min(0.999999, ratio * ratio * ratio));
        if (denom < 0.0) {
          needed = std::min<double>(params.ransac.max_iterations,
                                    std::log(1.0 - params.ransac.confidence) / denom);
        }
      }
    }
  }
  if (best_inliers < 3) return result;

  // Least-squares refit over the inlier correspondences.
  std::vector<Correspondence> inlier_corr;
  for (const auto& cr : corr) {
    if ((best_t.apply(src.points[cr.src]) - tgt.points[cr.tgt]).squaredNorm() <= inlier_d2) {
      inlier_corr.push_back(cr);
    }
  }
  if (inlier_corr.size() >= 3) {
    Eigen::Matrix3Xd s(3, inlier_corr.size()), d(3, inlier_corr.size());
    for (std::size_t i = 0; i < inlier_corr.size(); ++i) {
      s.col(i) = src.points[inlier_corr[i].src];
      d.col(i) = tgt.points[inlier_corr[i].tgt];
    }
    best_t = umeyama_rigid(s, d);
  }

  int inliers = 0;
  double err2 = 0.0;
  for (const auto& cr : corr) {
    double d2 = (best_t.apply(src.points[cr.src]) - tgt.points[cr.tgt]).squaredNorm();
    if (d2 <= inlier_d2) {
      ++inliers;
      err2 += d2;
    }
  }
  result.transform = best_t;
  result.fitness = static_cast<double>(inliers) / static_cast<double>(corr.size());
  result.rmse = inliers > 0 ? std::sqrt(err2 / inliers) : 0.0;
  result.converged = inliers >= params.ransac.min_inliers;
  return result;
}

RegistrationResult icp_refine(const LocalTactileMap& src, const LocalTactileMap& tgt,
                              const PoseSE3& init, const RegistrationParams& params) {
  params.validate();
  if (!tgt.has_normals()) throw std::invalid_argument("icp_refine: target normals required");
  RegistrationResult result;
  result.transform = init;
  if (src.points.empty() || tgt.points.empty()) return result;

  KdTree3 tree(tgt.points);
  const double max_d2 = params.icp.max_correspondence_distance *
                        params.icp.max_correspondence_distance;
  PoseSE3 t = init;
  double prev_obj = std::numeric_limits<double>::infinity();
  bool had_correspondences = false;

  for (int iter = 0; iter < params.icp.max_iterations; ++iter) {
    std::vector<Eigen::Vector3d> ps, qs, ns;
    for (const auto& sp : src.points) {
      Eigen::Vector3d p = t.apply(sp);
      auto [j, d2] = tree.nearest(p);
      if (j == KdTree3::npos || d2 > max_d2) continue;
      ps.push_back(p);
      qs.push_back(tgt.points[j]);
      ns.push_back(tgt.normals[j]);
    }
    if (ps.size() < 6) break;
    had_correspondences = true;

    auto objective = [&](const PoseSE3& trial) {
      // Residuals over the frozen correspondence set; trial maps the already
      // transformed points by the incremental delta relative to t.
      PoseSE3 delta = compose(trial, inverse(t));
      double acc = 0.0;
      for (std::size_t i = 0; i < ps.size(); ++i) {
        double r = ns[i].dot(delta.apply(ps[i]) - qs[i]);
        acc += r * r;
      }
      return acc;
    };

    double obj0 = 0.0;
    Matrix6d h = Matrix6d::Zero();
    Vector6d g = Vector6d::Zero();
    for (std::size_t i = 0; i < ps.size(); ++i) {
      double r = ns[i].dot(ps[i] - qs[i]);
      obj0 += r * r;
      Vector6d j;
      j.head<3>() = ps[i].cross(ns[i]);
      j.tail<3>() = ns[i];
      h += j * j.transpose();
      g += j * r;
    }

    // Flat overlaps leave in-plane translation unobservable; jitter keeps the
    // solve defined and the step simply stays in the observable subspace.
    Matrix6d damped = h + 1e-12 * Matrix6d::Identity();
    Vector6d delta = damped.ldlt().solve(-g);
    if (!delta.allFinite()) break;

    double step = 1.0;
    PoseSE3 t_new = t;
    double obj_new = obj0;
    for (int bt = 0; bt < 12; ++bt) {
      Vector6d d = step * delta;
      PoseSE3 inc(so3_exp(d.head<3>()), d.tail<3>());
      PoseSE3 trial = compose(inc, t);
      double obj_trial = objective(trial);
      if (obj_trial <= obj0) {
        t_new = trial;
        obj_new = obj_trial;
        break;
      }
      step *= 0.5;
    }
    if (obj_new > obj0) {
      result.objective_monotone = false;  // unreachable with backtracking
      break;
    }
    if (obj_new == obj0) break;  // no descent step found, local minimum
    t = t_new;

    double rel = (prev_obj - obj_new) / std::max(prev_obj, 1e-30);
    prev_obj = obj_new;
    if (std::isfinite(rel) && rel >= 0.0 && rel < params.icp.convergence_delta) break;
  }

  // Final correspondence pass for the reported quality numbers.
  std::size_t matched = 0;
  double err2 = 0.0;
  for (const auto& sp : src.points) {
    Eigen::Vector3d p = t.apply(sp);
    auto [j, d2] = tree.nearest(p);
    if (j == KdTree3::npos || d2 > max_d2) continue;
    double r = tgt.normals[j].dot(p - tgt.points[j]);
    err2 += r * r;
    ++matched;
  }
  result.transform = t;
  result.fitness = static_cast<double>(matched) / static_cast<double>(src.points.size());
  result.rmse = matched > 0 ? std::sqrt(err2 / matched) : 0.0;
  result.converged = had_correspondences && matched > 0;
  return result;
}

LocalTactileMap preprocess(const LocalTactileMap& m, const RegistrationParams& params,
                           bool* roi_fallback) {
  params.validate();
  LocalTactileMap down = voxel_downsample(m, params.voxel_size);
  estimate_normals(down, params.normal_knn);
  RoiResult roi = extract_roi(down, params.pitch_threshold_deg);
  if (roi_fallback) *roi_fallback = roi.fallback;
  return std::move(roi.map);
}

RegistrationResult register_pair(const LocalTactileMap& src_pre, const LocalTactileMap& tgt_pre,
                                 const RegistrationParams& params) {
  RegistrationResult coarse = global_register(src_pre, tgt_pre, params);
  PoseSE3 init = coarse.converged ? coarse.transform : PoseSE3::identity();
  RegistrationResult fine = icp_refine(src_pre, tgt_pre, init, params);
  fine.converged = fine.converged && coarse.converged;
  return fine;
}

OdometryResult sequential_odometry(const std::vector<LocalTactileMap>& frames,
                                   const RegistrationParams& params) {
  if (frames.empty()) throw std::invalid_argument("sequential_odometry: no frames");
  OdometryResult out;
  out.preprocessed.reserve(frames.size());
  for (const auto& f : frames) out.preprocessed.push_back(preprocess(f, params));

  out.poses.push_back(PoseSE3::identity());
  for (std::size_t k = 1; k < frames.size(); ++k) {
    RegistrationParams pair_params = params;
    pair_params.seed = Rng::child(params.seed, k).next_u64();
    RegistrationResult r =
        register_pair(out.preprocessed[k], out.preprocessed[k - 1], pair_params);
    if (!r.converged) {
      throw std::runtime_error("sequential_odometry: registration of frames " +
                               std::to_string(k - 1) + " and " + std::to_string(k) + " failed");
    }
    out.poses.push_back(compose(out.poses.back(), r.transform));
    out.pairwise.push_back(r);
  }
  return out;
}

}  // namespace tacmap::reg
