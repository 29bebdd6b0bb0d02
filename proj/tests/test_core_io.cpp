#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>

#include "tacmap/io.hpp"
#include "tacmap/rng.hpp"
#include "tacmap/spatial.hpp"

using namespace tacmap;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

LocalTactileMap random_map(int n, bool normals, std::uint64_t seed) {
  Rng rng(seed);
  LocalTactileMap m;
  for (int i = 0; i < n; ++i) {
    m.points.emplace_back(rng.uniform(-8, 8), rng.uniform(-8, 8), rng.uniform(-1, 1));
    if (normals) {
      Eigen::Vector3d v(rng.normal(), rng.normal(), std::abs(rng.normal()) + 0.5);
      m.normals.push_back(v.normalized());
    }
  }
  return m;
}

}  // namespace

TEST_CASE("ply round trip binary and ascii") {
  for (bool binary : {true, false}) {
    LocalTactileMap m = random_map(123, true, binary ? 1 : 2);
    std::string path = temp_path("tacmap_test.ply");
    io::save_ply(path, m, binary);
    LocalTactileMap back = io::load_ply(path);
    REQUIRE(back.points.size() == m.points.size());
    REQUIRE(back.normals.size() == m.normals.size());
    for (std::size_t i = 0; i < m.points.size(); ++i) {
      CHECK((back.points[i] - m.points[i]).norm() < 1e-4);  // float32 storage
      CHECK((back.normals[i] - m.normals[i]).norm() < 1e-4);
    }
    std::remove(path.c_str());
  }
}

TEST_CASE("ply without normals") {
  LocalTactileMap m = random_map(10, false, 3);
  std::string path = temp_path("tacmap_nonorm.ply");
  io::save_ply(path, m);
  LocalTactileMap back = io::load_ply(path);
  CHECK(back.points.size() == 10);
  CHECK(!back.has_normals());
  std::remove(path.c_str());
}

TEST_CASE("trajectory csv: rewrite of a loaded file is byte-identical") {
  Rng rng(5);
  std::vector<PoseSE3> poses;
  for (int i = 0; i < 7; ++i) {
    Eigen::Vector3d axis(rng.normal(), rng.normal(), rng.normal());
    poses.emplace_back(so3_exp(axis.normalized() * rng.uniform(-2, 2)),
                       Eigen::Vector3d(rng.uniform(-9, 9), rng.uniform(-9, 9), rng.uniform(-9, 9)));
  }
  std::string a = temp_path("traj_a.csv"), b = temp_path("traj_b.csv");
  io::save_trajectory_csv(a, poses);
  std::vector<PoseSE3> loaded = io::load_trajectory_csv(a);
  io::save_trajectory_csv(b, loaded);
  CHECK(io::read_text_file(a) == io::read_text_file(b));
  REQUIRE(loaded.size() == poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    CHECK((loaded[i].matrix() - poses[i].matrix()).cwiseAbs().maxCoeff() < 1e-12);
  }
  std::remove(a.c_str());
  std::remove(b.c_str());
}

TEST_CASE("grid containers round trip") {
  GradientField g = GradientField::create(13, 9, 0.05);
  Rng rng(8);
  for (auto& v : g.gx) v = rng.uniform(-1, 1);
  for (auto& v : g.gy) v = rng.uniform(-1, 1);
  std::string path = temp_path("grid.tgb");
  io::save_gradient_field(path, g);
  GradientField back = io::load_gradient_field(path);
  CHECK(back.width == 13);
  CHECK(back.height == 9);
  CHECK(back.pixel_pitch == doctest::Approx(0.05));
  for (std::size_t i = 0; i < g.gx.size(); ++i) {
    CHECK(std::abs(back.gx[i] - g.gx[i]) < 1e-6);
  }
  std::remove(path.c_str());

  // Lossless f64 variant reloads bit-exactly.
  std::string path64 = temp_path("grid.tgd");
  io::save_gradient_field_f64(path64, g);
  GradientField exact = io::load_gradient_field_f64(path64);
  CHECK(exact.gx == g.gx);
  CHECK(exact.gy == g.gy);
  std::remove(path64.c_str());
}

TEST_CASE("map f64 container is lossless") {
  LocalTactileMap m = random_map(77, true, 21);
  m.frame_id = 4;
  m.grid_width = 11;
  m.grid_height = 7;
  m.pixel_pitch = 0.05;
  std::string path = temp_path("map.tgm");
  io::save_map_f64(path, m);
  LocalTactileMap back = io::load_map_f64(path);
  REQUIRE(back.points.size() == m.points.size());
  CHECK(back.frame_id == 4);
  CHECK(back.grid_width == 11);
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    CHECK(back.points[i] == m.points[i]);
    CHECK(back.normals[i] == m.normals[i]);
  }
  std::remove(path.c_str());
}

TEST_CASE("png16 round trip") {
  int w = 21, h = 13;
  std::vector<std::uint16_t> values(static_cast<std::size_t>(w) * h);
  Rng rng(9);
  for (auto& v : values) v = static_cast<std::uint16_t>(rng.next_u64() & 0xffff);
  std::string path = temp_path("hf.png");
  io::save_png16(path, w, h, values);
  int rw = 0, rh = 0;
  std::vector<std::uint16_t> back = io::load_png16(path, &rw, &rh);
  CHECK(rw == w);
  CHECK(rh == h);
  CHECK(back == values);
  std::remove(path.c_str());
}

TEST_CASE("kd-tree agrees with brute force") {
  Rng rng(31);
  std::vector<Eigen::Vector3d> pts;
  for (int i = 0; i < 500; ++i) {
    pts.emplace_back(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
  }
  KdTree3 tree(pts);
  for (int q = 0; q < 50; ++q) {
    Eigen::Vector3d query(rng.uniform(-6, 6), rng.uniform(-6, 6), rng.uniform(-6, 6));

    std::size_t best = 0;
    double best_d2 = (pts[0] - query).squaredNorm();
    for (std::size_t i = 1; i < pts.size(); ++i) {
      double d2 = (pts[i] - query).squaredNorm();
      if (d2 < best_d2) {
        best_d2 = d2;
        best = i;
      }
    }
    auto [idx, d2] = tree.nearest(query);
    CHECK(idx == best);
    CHECK(d2 == doctest::Approx(best_d2));

    double r = rng.uniform(0.5, 2.0);
    auto found = tree.radius(query, r);
    std::size_t brute_count = 0;
    for (const auto& p : pts) {
      if ((p - query).squaredNorm() <= r * r) ++brute_count;
    }
    CHECK(found.size() == brute_count);

    auto nn = tree.knn(query, 7);
    REQUIRE(nn.size() == 7);
    CHECK(nn.front() == best);
    for (std::size_t i = 1; i < nn.size(); ++i) {
      CHECK((pts[nn[i - 1]] - query).norm() <= (pts[nn[i]] - query).norm() + 1e-12);
    }
  }
}
