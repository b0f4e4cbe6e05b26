#pragma once

#include <cstdint>
#include <vector>

#include "s2d/geometry.hpp"
#include "s2d/nn.hpp"
#include "s2d/tensor.hpp"

namespace s2d {

// Three orthogonal feature planes, each (C, R, R). Canonical axis pairing:
// XY sampled at (x, y), ZY at (z, y), XZ at (x, z); the first coordinate is
// the column axis, the second the row axis, row/col 0 at coordinate -1.
struct TriPlane {
  Tensor xy, zy, xz;

  std::size_t channels() const { return xy.shape()[0]; }
  std::size_t resolution() const { return xy.shape()[1]; }
  void validate() const;
};

// Channels [0,C) -> XY, [C,2C) -> ZY, [2C,3C) -> XZ.
TriPlane split_planes(const Tensor& f_img);

struct TriPlaneGeneratorConfig {
  std::size_t input_size = 64;      // satellite side length S
  std::size_t plane_channels = 32;  // per plane; output has 3x this
  std::size_t depth = 4;            // down/up stages
  std::size_t base_channels = 16;
};

// Resolution-preserving U-Net encoder-decoder with a linear 1x1 head.
// Plane resolution equals the satellite input size.
struct TriPlaneGenerator {
  TriPlaneGeneratorConfig cfg;
  Conv2d stem;
  std::vector<Conv2d> enc;  // stride-2
  std::vector<Conv2d> dec;  // after 2x upsample, input concat skip
  Conv2d head;              // 1x1 linear to 3*plane_channels

  TriPlaneGenerator() = default;
  TriPlaneGenerator(const TriPlaneGeneratorConfig& cfg, Rng& rng);

  Tensor forward(const Tensor& sat_image) const;  // (3,S,S) -> (3C,S,S)
  TriPlane generate(const Tensor& sat_image) const;
  void collect(ParamMap& m, const std::string& prefix) const;
};

struct QueryResult {
  Tensor features;                   // (P, 3C), order XY || ZY || XZ
  std::vector<std::uint8_t> outside;  // per point
};

// Bilinear sampling at normalized points; out-of-range coordinates are
// edge-clamped and flagged.
QueryResult query_points(const TriPlane& planes, const std::vector<Vec3>& pts);

}  // namespace s2d
