#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "s2d/illumination.hpp"
#include "s2d/image.hpp"
#include "s2d/tensor.hpp"

namespace s2d {

// ---- portable tensor container (.ptns) ----
// magic "PTNS", version u16, rank u16, dims u64 each, dtype tag u8, payload
// little-endian row-major.

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, u8 = 2 };

struct TensorData {
  Dtype dtype = Dtype::f64;
  Shape dims;
  std::vector<unsigned char> payload;

  std::size_t count() const { return shape_size(dims); }
  std::vector<double> as_doubles() const;
  static TensorData from_doubles(const std::vector<double>& v, const Shape& dims);
  static TensorData from_floats(const std::vector<float>& v, const Shape& dims);
  static TensorData from_bytes(const std::vector<std::uint8_t>& v, const Shape& dims);
};

void write_tensor_file(const std::filesystem::path& path, const TensorData& t);
TensorData read_tensor_file(const std::filesystem::path& path);

// ---- PNG (8-bit gray or RGB) ----
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

// ---- dataset ----
// Manifest CSV header: sat,street,mask,east_m,north_m,heading_rad
struct SceneSample {
  std::string sat_path, street_path, mask_path;
  double east_m = 0, north_m = 0, heading_rad = 0;
};

struct LoadedSample {
  Image sat;     // 3 x S x S
  Image street;  // 3 x H x W
  SkyMask mask;  // H x W
  double east_m = 0, north_m = 0, heading_rad = 0;
};

std::vector<SceneSample> load_manifest(const std::filesystem::path& csv);
LoadedSample load_sample(const SceneSample& s, const std::filesystem::path& root);
std::vector<LoadedSample> load_dataset(const std::filesystem::path& root);

// Trajectory CSV header: east_m,north_m,heading_rad
struct TrajectoryPoint {
  double east_m = 0, north_m = 0, heading_rad = 0;
};
std::vector<TrajectoryPoint> load_trajectory(const std::filesystem::path& csv);

// Image <-> tensor bridges
Tensor image_to_tensor(const Image& img);
Image tensor_to_image(const Tensor& t);  // clamps to [0,1]

}  // namespace s2d
