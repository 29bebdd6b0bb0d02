#include "tacmap/io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace tacmap::io {

namespace {

using nlohmann::json;

void fail(const std::string& path, const std::string& what) {
  throw std::runtime_error(path + ": " + what);
}

std::ofstream open_out(const std::string& path, bool binary) {
  std::ofstream f(path, binary ? std::ios::binary : std::ios::out);
  if (!f) fail(path, "cannot open for writing");
  return f;
}

std::ifstream open_in(const std::string& path, bool binary) {
  std::ifstream f(path, binary ? std::ios::binary : std::ios::in);
  if (!f) fail(path, "cannot open for reading");
  return f;
}

std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

void save_ply(const std::string& path, const LocalTactileMap& m, bool binary) {
  bool normals = m.has_normals();
  std::ofstream f = open_out(path, true);
  f << "ply\nformat " << (binary ? "binary_little_endian" : "ascii") << " 1.0\n";
  f << "comment tacmap local tactile map, units mm\n";
  f << "element vertex " << m.points.size() << "\n";
  f << "property float x\nproperty float y\nproperty float z\n";
  if (normals) f << "property float nx\nproperty float ny\nproperty float nz\n";
  f << "end_header\n";
  for (std::size_t i = 0; i < m.points.size(); ++i) {
    float row[6];
    int n = 3;
    row[0] = static_cast<float>(m.points[i].x());
    row[1] = static_cast<float>(m.points[i].y());
    row[2] = static_cast<float>(m.points[i].z());
    if (normals) {
      row[3] = static_cast<float>(m.normals[i].x());
      row[4] = static_cast<float>(m.normals[i].y());
      row[5] = static_cast<float>(m.normals[i].z());
      n = 6;
    }
    if (binary) {
      f.write(reinterpret_cast<const char*>(row), n * sizeof(float));
    } else {
      for (int k = 0; k < n; ++k) f << row[k] << (k + 1 == n ? '\n' : ' ');
    }
  }
  if (!f) fail(path, "write failed");
}

LocalTactileMap load_ply(const std::string& path) {
  std::ifstream f = open_in(path, true);
  std::string line;
  if (!std::getline(f, line) || line.substr(0, 3) != "ply") fail(path, "not a PLY file");
  bool binary = false;
  std::size_t count = 0;
  std::vector<std::string> props;
  bool in_vertex = false;
  while (std::getline(f, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream ss(line);
    std::string tok;
    ss >> tok;
    if (tok == "format") {
      std::string fmt;
      ss >> fmt;
      if (fmt == "binary_little_endian") {
        binary = true;
      } else if (fmt != "ascii") {
        fail(path, "unsupported PLY format " + fmt);
      }
    } else if (tok == "element") {
      std::string name;
      ss >> name >> count;
      in_vertex = (name == "vertex");
      if (!in_vertex && count > 0) fail(path, "unsupported non-vertex element");
    } else if (tok == "property" && in_vertex) {
      std::string type, name;
      ss >> type >> name;
      if (type != "float" && type != "float32") fail(path, "unsupported property type " + type);
      props.push_back(name);
    } else if (tok == "end_header") {
      break;
    }
  }
  int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
  for (int i = 0; i < static_cast<int>(props.size()); ++i) {
    if (props[i] == "x") ix = i;
    if (props[i] == "y") iy = i;
    if (props[i] == "z") iz = i;
    if (props[i] == "nx") inx = i;
    if (props[i] == "ny") iny = i;
    if (props[i] == "nz") inz = i;
  }
  if (ix < 0 || iy < 0 || iz < 0) fail(path, "PLY lacks x/y/z properties");
  bool normals = inx >= 0 && iny >= 0 && inz >= 0;

  LocalTactileMap m;
  m.points.reserve(count);
  if (normals) m.normals.reserve(count);
  std::vector<float> row(props.size());
  for (std::size_t i = 0; i < count; ++i) {
    if (binary) {
      f.read(reinterpret_cast<char*>(row.data()),
             static_cast<std::streamsize>(row.size() * sizeof(float)));
      if (!f) fail(path, "truncated vertex data");
    } else {
      for (auto& v : row) {
        if (!(f >> v)) fail(path, "truncated vertex data");
      }
    }
    m.points.emplace_back(row[ix], row[iy], row[iz]);
    if (normals) {
      Eigen::Vector3d n(row[inx], row[iny], row[inz]);
      double len = n.norm();
      m.normals.push_back(len > 0.0 ? Eigen::Vector3d(n / len) : Eigen::Vector3d(0, 0, 1));
    }
  }
  return m;
}

std::string format_pose_line(const PoseSE3& p) {
  const Eigen::Matrix3d& r = p.rotation();
  const Eigen::Vector3d& t = p.translation();
  std::string out;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) {
      out += format_g17(r(row, col));
      out += ',';
    }
    out += format_g17(t[row]);
    if (row < 2) out += ',';
  }
  return out;
}

void save_trajectory_csv(const std::string& path, const std::vector<PoseSE3>& poses) {
  std::ofstream f = open_out(path, false);
  for (const auto& p : poses) f << format_pose_line(p) << "\n";
  if (!f) fail(path, "write failed");
}

std::vector<PoseSE3> load_trajectory_csv(const std::string& path) {
  std::ifstream f = open_in(path, false);
  std::vector<PoseSE3> poses;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    for (auto& c : line) {
      if (c == ',') c = ' ';
    }
    std::istringstream ss(line);
    double v[12];
    for (double& x : v) {
      if (!(ss >> x)) fail(path, "malformed pose line");
    }
    Eigen::Matrix3d r;
    r << v[0], v[1], v[2], v[4], v[5], v[6], v[8], v[9], v[10];
    poses.emplace_back(r, Eigen::Vector3d(v[3], v[7], v[11]));
  }
  return poses;
}

namespace {

constexpr char kGridMagic[4] = {'T', 'G', 'B', '1'};

void write_grid(const std::string& path, const json& header, const std::vector<float>& data) {
  std::ofstream f = open_out(path, true);
  std::string hdr = header.dump();
  std::uint32_t len = static_cast<std::uint32_t>(hdr.size());
  f.write(kGridMagic, 4);
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(hdr.data(), len);
  f.write(reinterpret_cast<const char*>(data.data()),
          static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) fail(path, "write failed");
}

json read_grid(const std::string& path, std::vector<float>& data) {
  std::ifstream f = open_in(path, true);
  char magic[4];
  std::uint32_t len = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&len), 4);
  if (!f || std::memcmp(magic, kGridMagic, 4) != 0) fail(path, "not a grid container");
  std::string hdr(len, '\0');
  f.read(hdr.data(), len);
  json header = json::parse(hdr);
  std::size_t planes = header.at("planes").size();
  std::size_t n = header.at("width").get<std::size_t>() * header.at("height").get<std::size_t>();
  data.resize(planes * n);
  f.read(reinterpret_cast<char*>(data.data()),
         static_cast<std::streamsize>(data.size() * sizeof(float)));
  if (!f) fail(path, "truncated grid data");
  return header;
}

template <typename Scalar>
void write_raw(std::ofstream& f, const std::vector<Scalar>& v) {
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(Scalar)));
}

template <typename Scalar>
void read_raw(std::ifstream& f, std::vector<Scalar>& v) {
  f.read(reinterpret_cast<char*>(v.data()),
         static_cast<std::streamsize>(v.size() * sizeof(Scalar)));
}

}  // namespace

void save_depth(const std::string& path, const DepthMap& d) {
  json header = {{"kind", "depth"},
                 {"width", d.width},
                 {"height", d.height},
                 {"pixel_pitch", d.pixel_pitch},
                 {"planes", {"z"}}};
  std::vector<float> data(d.z.begin(), d.z.end());
  write_grid(path, header, data);
}

DepthMap load_depth(const std::string& path) {
  std::vector<float> data;
  json header = read_grid(path, data);
  DepthMap d = DepthMap::create(header.at("width"), header.at("height"),
                                header.at("pixel_pitch"));
  d.z.assign(data.begin(), data.end());
  return d;
}

void save_gradient_field(const std::string& path, const GradientField& g) {
  json header = {{"kind", "gradient"},
                 {"width", g.width},
                 {"height", g.height},
                 {"pixel_pitch", g.pixel_pitch},
                 {"planes", {"gx", "gy"}}};
  std::vector<float> data;
  data.reserve(g.gx.size() * 2);
  data.insert(data.end(), g.gx.begin(), g.gx.end());
  data.insert(data.end(), g.gy.begin(), g.gy.end());
  write_grid(path, header, data);
}

GradientField load_gradient_field(const std::string& path) {
  std::vector<float> data;
  json header = read_grid(path, data);
  GradientField g = GradientField::create(header.at("width"), header.at("height"),
                                          header.at("pixel_pitch"));
  std::size_t n = g.gx.size();
  g.gx.assign(data.begin(), data.begin() + n);
  g.gy.assign(data.begin() + n, data.end());
  return g;
}

void save_gradient_field_f64(const std::string& path, const GradientField& g) {
  std::ofstream f = open_out(path, true);
  json header = {{"kind", "gradient64"},
                 {"width", g.width},
                 {"height", g.height},
                 {"pixel_pitch", g.pixel_pitch}};
  std::string hdr = header.dump();
  std::uint32_t len = static_cast<std::uint32_t>(hdr.size());
  f.write("TGD1", 4);
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(hdr.data(), len);
  write_raw(f, g.gx);
  write_raw(f, g.gy);
  if (!f) fail(path, "write failed");
}

GradientField load_gradient_field_f64(const std::string& path) {
  std::ifstream f = open_in(path, true);
  char magic[4];
  std::uint32_t len = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&len), 4);
  if (!f || std::memcmp(magic, "TGD1", 4) != 0) fail(path, "not a gradient64 container");
  std::string hdr(len, '\0');
  f.read(hdr.data(), len);
  json header = json::parse(hdr);
  GradientField g = GradientField::create(header.at("width"), header.at("height"),
                                          header.at("pixel_pitch"));
  read_raw(f, g.gx);
  read_raw(f, g.gy);
  if (!f) fail(path, "truncated gradient data");
  return g;
}

void save_map_f64(const std::string& path, const LocalTactileMap& m) {
  std::ofstream f = open_out(path, true);
  json header = {{"kind", "map64"},
                 {"count", m.points.size()},
                 {"normals", m.has_normals()},
                 {"frame_id", m.frame_id},
                 {"grid_width", m.grid_width},
                 {"grid_height", m.grid_height},
                 {"pixel_pitch", m.pixel_pitch}};
  std::string hdr = header.dump();
  std::uint32_t len = static_cast<std::uint32_t>(hdr.size());
  f.write("TGM1", 4);
  f.write(reinterpret_cast<const char*>(&len), 4);
  f.write(hdr.data(), len);
  auto write_vecs = [&](const std::vector<Eigen::Vector3d>& v) {
    for (const auto& p : v) {
      double row[3] = {p.x(), p.y(), p.z()};
      f.write(reinterpret_cast<const char*>(row), sizeof(row));
    }
  };
  write_vecs(m.points);
  if (m.has_normals()) write_vecs(m.normals);
  if (!f) fail(path, "write failed");
}

LocalTactileMap load_map_f64(const std::string& path) {
  std::ifstream f = open_in(path, true);
  char magic[4];
  std::uint32_t len = 0;
  f.read(magic, 4);
  f.read(reinterpret_cast<char*>(&len), 4);
  if (!f || std::memcmp(magic, "TGM1", 4) != 0) fail(path, "not a map64 container");
  std::string hdr(len, '\0');
  f.read(hdr.data(), len);
  json header = json::parse(hdr);
  LocalTactileMap m;
  m.frame_id = header.at("frame_id");
  m.grid_width = header.at("grid_width");
  m.grid_height = header.at("grid_height");
  m.pixel_pitch = header.at("pixel_pitch");
  std::size_t count = header.at("count");
  bool normals = header.at("normals");
  auto read_vecs = [&](std::vector<Eigen::Vector3d>& v) {
    v.resize(count);
    for (auto& p : v) {
      double row[3];
      f.read(reinterpret_cast<char*>(row), sizeof(row));
      p = Eigen::Vector3d(row[0], row[1], row[2]);
    }
  };
  read_vecs(m.points);
  if (normals) read_vecs(m.normals);
  if (!f) fail(path, "truncated map data");
  return m;
}

void save_png16(const std::string& path, int width, int height,
                const std::vector<std::uint16_t>& values) {
  if (values.size() != static_cast<std::size_t>(width) * height) {
    fail(path, "png16 value count mismatch");
  }
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) fail(path, "cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    fail(path, "libpng write error");
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, width, height, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_set_swap(png);  // values are host little-endian; PNG wants big-endian
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(
        const_cast<std::uint16_t*>(values.data() + static_cast<std::size_t>(y) * width));
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

std::vector<std::uint16_t> load_png16(const std::string& path, int* width, int* height) {
  FILE* fp = std::fopen(path.c_str(), "rb");
  if (!fp) fail(path, "cannot open for reading");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(path, "libpng read error");
  }
  png_init_io(png, fp);
  png_read_info(png, info);
  if (png_get_color_type(png, info) != PNG_COLOR_TYPE_GRAY ||
      png_get_bit_depth(png, info) != 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    fail(path, "expected 16-bit grayscale PNG");
  }
  int w = static_cast<int>(png_get_image_width(png, info));
  int h = static_cast<int>(png_get_image_height(png, info));
  png_set_swap(png);
  std::vector<std::uint16_t> values(static_cast<std::size_t>(w) * h);
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) {
    rows[y] = reinterpret_cast<png_bytep>(values.data() + static_cast<std::size_t>(y) * w);
  }
  png_read_image(png, rows.data());
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  *width = w;
  *height = h;
  return values;
}

std::string read_text_file(const std::string& path) {
  std::ifstream f = open_in(path, true);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f = open_out(path, true);
  f << content;
  if (!f) fail(path, "write failed");
}

}  // namespace tacmap::io
