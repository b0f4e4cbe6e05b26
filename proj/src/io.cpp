#include "s2d/io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace s2d {

namespace fs = std::filesystem;

// ---- tensor container ----

static std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::u8: return 1;
  }
  throw std::invalid_argument("unknown dtype tag");
}

std::vector<double> TensorData::as_doubles() const {
  std::vector<double> out(count());
  if (dtype == Dtype::f64) {
    std::memcpy(out.data(), payload.data(), payload.size());
  } else if (dtype == Dtype::f32) {
    const float* p = reinterpret_cast<const float*>(payload.data());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = p[i];
  } else {
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = payload[i];
  }
  return out;
}

TensorData TensorData::from_doubles(const std::vector<double>& v, const Shape& dims) {
  if (v.size() != shape_size(dims))
    throw std::invalid_argument("tensor payload size mismatch");
  TensorData t;
  t.dtype = Dtype::f64;
  t.dims = dims;
  t.payload.resize(v.size() * 8);
  std::memcpy(t.payload.data(), v.data(), t.payload.size());
  return t;
}

TensorData TensorData::from_floats(const std::vector<float>& v, const Shape& dims) {
  if (v.size() != shape_size(dims))
    throw std::invalid_argument("tensor payload size mismatch");
  TensorData t;
  t.dtype = Dtype::f32;
  t.dims = dims;
  t.payload.resize(v.size() * 4);
  std::memcpy(t.payload.data(), v.data(), t.payload.size());
  return t;
}

TensorData TensorData::from_bytes(const std::vector<std::uint8_t>& v, const Shape& dims) {
  if (v.size() != shape_size(dims))
    throw std::invalid_argument("tensor payload size mismatch");
  TensorData t;
  t.dtype = Dtype::u8;
  t.dims = dims;
  t.payload.assign(v.begin(), v.end());
  return t;
}

void write_tensor_file(const fs::path& path, const TensorData& t) {
  if (t.payload.size() != t.count() * dtype_size(t.dtype))
    throw std::invalid_argument("tensor payload length does not match dims");
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
  f.write("PTNS", 4);
  std::uint16_t version = 1, rank = std::uint16_t(t.dims.size());
  f.write(reinterpret_cast<const char*>(&version), 2);
  f.write(reinterpret_cast<const char*>(&rank), 2);
  for (auto d : t.dims) {
    std::uint64_t d64 = d;
    f.write(reinterpret_cast<const char*>(&d64), 8);
  }
  std::uint8_t tag = std::uint8_t(t.dtype);
  f.write(reinterpret_cast<const char*>(&tag), 1);
  f.write(reinterpret_cast<const char*>(t.payload.data()),
          std::streamsize(t.payload.size()));
  if (!f) throw std::runtime_error("write failed: " + path.string());
}

TensorData read_tensor_file(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open: " + path.string());
  char magic[4];
  f.read(magic, 4);
  if (!f || std::memcmp(magic, "PTNS", 4) != 0)
    throw std::runtime_error("not a PTNS file: " + path.string());
  std::uint16_t version = 0, rank = 0;
  f.read(reinterpret_cast<char*>(&version), 2);
  f.read(reinterpret_cast<char*>(&rank), 2);
  if (version != 1) throw std::runtime_error("unsupported PTNS version");
  TensorData t;
  t.dims.resize(rank);
  for (auto& d : t.dims) {
    std::uint64_t d64 = 0;
    f.read(reinterpret_cast<char*>(&d64), 8);
    d = std::size_t(d64);
  }
  std::uint8_t tag = 0;
  f.read(reinterpret_cast<char*>(&tag), 1);
  if (tag > 2) throw std::runtime_error("unknown dtype tag in " + path.string());
  t.dtype = Dtype(tag);
  t.payload.resize(t.count() * dtype_size(t.dtype));
  f.read(reinterpret_cast<char*>(t.payload.data()), std::streamsize(t.payload.size()));
  if (!f) throw std::runtime_error("truncated PTNS file: " + path.string());
  return t;
}

// ---- PNG ----

Image read_png(const fs::path& path) {
  FILE* fp = std::fopen(path.string().c_str(), "rb");
  if (!fp) throw std::runtime_error("cannot open PNG: " + path.string());
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("failed to decode PNG: " + path.string());
  }
  png_init_io(png, fp);
  png_read_info(png, info);

  png_uint_32 w = png_get_image_width(png, info);
  png_uint_32 h = png_get_image_height(png, info);
  int color = png_get_color_type(png, info);
  int depth = png_get_bit_depth(png, info);

  if (depth == 16) png_set_strip_16(png);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  std::size_t channels = png_get_channels(png, info);
  if (channels != 1 && channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    std::fclose(fp);
    throw std::runtime_error("unsupported PNG channel count in " + path.string());
  }

  std::vector<std::uint8_t> row(w * channels);
  Image img(channels, h, w);
  for (png_uint_32 y = 0; y < h; ++y) {
    png_read_row(png, row.data(), nullptr);
    for (png_uint_32 x = 0; x < w; ++x)
      for (std::size_t c = 0; c < channels; ++c)
        img.at(c, y, x) = double(row[x * channels + c]) / 255.0;
  }
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  std::fclose(fp);
  return img;
}

void write_png(const fs::path& path, const Image& img) {
  if (img.channels != 1 && img.channels != 3)
    throw std::invalid_argument("write_png: need 1 or 3 channels");
  FILE* fp = std::fopen(path.string().c_str(), "wb");
  if (!fp) throw std::runtime_error("cannot open for writing: " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw std::runtime_error("failed to encode PNG: " + path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, png_uint_32(img.width), png_uint_32(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(img.width * img.channels);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x)
      for (std::size_t c = 0; c < img.channels; ++c) {
        double v = std::clamp(img.at(c, y, x), 0.0, 1.0);
        row[x * img.channels + c] = std::uint8_t(std::lround(v * 255.0));
      }
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
}

// ---- dataset ----

static std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  return out;
}

std::vector<SceneSample> load_manifest(const fs::path& csv) {
  std::ifstream f(csv);
  if (!f) throw std::runtime_error("cannot open manifest: " + csv.string());
  std::string line;
  if (!std::getline(f, line))
    throw std::runtime_error("manifest is missing its header line");
  if (split_csv(line) != std::vector<std::string>{"sat", "street", "mask",
                                                  "east_m", "north_m",
                                                  "heading_rad"})
    throw std::runtime_error("unexpected manifest header: " + line);

  std::vector<SceneSample> out;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 6)
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": expected 6 fields, got " +
                               std::to_string(cells.size()));
    SceneSample s;
    s.sat_path = cells[0];
    s.street_path = cells[1];
    s.mask_path = cells[2];
    try {
      s.east_m = std::stod(cells[3]);
      s.north_m = std::stod(cells[4]);
      s.heading_rad = std::stod(cells[5]);
    } catch (const std::exception&) {
      throw std::runtime_error("manifest line " + std::to_string(lineno) +
                               ": malformed numeric field");
    }
    out.push_back(std::move(s));
  }
  if (out.empty())
    std::cerr << "warning: manifest " << csv << " lists no samples\n";
  return out;
}

LoadedSample load_sample(const SceneSample& s, const fs::path& root) {
  LoadedSample out;
  out.sat = read_png(root / s.sat_path);
  out.street = read_png(root / s.street_path);
  Image mask_img = read_png(root / s.mask_path);
  if (out.sat.channels != 3)
    throw std::runtime_error("satellite image must be RGB: " + s.sat_path);
  if (out.street.channels != 3)
    throw std::runtime_error("street image must be RGB: " + s.street_path);
  bool warned = false;
  out.mask = SkyMask::from_image(mask_img, &warned);
  if (warned)
    std::cerr << "warning: binarized gray mask at 0.5: " << s.mask_path << "\n";
  if (out.mask.width != out.street.width || out.mask.height != out.street.height)
    throw std::runtime_error("mask size does not match street image for sample " +
                             s.street_path);
  out.east_m = s.east_m;
  out.north_m = s.north_m;
  out.heading_rad = s.heading_rad;
  return out;
}

std::vector<LoadedSample> load_dataset(const fs::path& root) {
  auto manifest = load_manifest(root / "manifest.csv");
  std::vector<LoadedSample> out;
  out.reserve(manifest.size());
  for (const auto& s : manifest) out.push_back(load_sample(s, root));
  return out;
}

std::vector<TrajectoryPoint> load_trajectory(const fs::path& csv) {
  std::ifstream f(csv);
  if (!f) throw std::runtime_error("cannot open trajectory: " + csv.string());
  std::string line;
  if (!std::getline(f, line) ||
      split_csv(line) != std::vector<std::string>{"east_m", "north_m", "heading_rad"})
    throw std::runtime_error("unexpected trajectory header");
  std::vector<TrajectoryPoint> out;
  std::size_t lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto cells = split_csv(line);
    if (cells.size() != 3)
      throw std::runtime_error("trajectory line " + std::to_string(lineno) +
                               ": expected 3 fields");
    out.push_back({std::stod(cells[0]), std::stod(cells[1]), std::stod(cells[2])});
  }
  return out;
}

Tensor image_to_tensor(const Image& img) {
  return from_vector(img.values, {img.channels, img.height, img.width});
}

Image tensor_to_image(const Tensor& t) {
  if (t.shape().size() != 3)
    throw std::invalid_argument("tensor_to_image: expected (C,H,W)");
  Image img(t.shape()[0], t.shape()[1], t.shape()[2]);
  for (std::size_t i = 0; i < t.size(); ++i)
    img.values[i] = std::clamp(t.data()[i], 0.0, 1.0);
  return img;
}

}  // namespace s2d
