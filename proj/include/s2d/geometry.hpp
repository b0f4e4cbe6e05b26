#pragma once

#include <cstddef>
#include <vector>

// World/camera conventions: right-handed (east, north, up) axes, satellite
// image row 0 at the north edge, panorama central column pointing north.

namespace s2d {

struct Vec3 {
  double x = 0, y = 0, z = 0;  // east, north, up
};

Vec3 operator+(Vec3 a, Vec3 b);
Vec3 operator-(Vec3 a, Vec3 b);
Vec3 operator*(Vec3 a, double s);
double norm(Vec3 a);

struct WorldFrame {
  Vec3 box_min{-32, -32, 0};
  Vec3 box_max{32, 32, 16};
  double camera_height = 1.6;  // street cameras sit this far above the floor

  void validate() const;
  Vec3 center() const;
  Vec3 extent() const;
  double diagonal() const;
};

enum class ElevationMapping {
  linear,       // equirectangular rows: angle linear in the row index
  cylindrical,  // rows linear in cylinder height, angle via atan
};

struct PanoramaCamera {
  Vec3 position;
  double heading_offset = 0.0;  // radians, 0 = facing true north
  std::size_t width = 256;
  std::size_t height = 64;
  double elev_min = -0.78539816339744831;  // -pi/4
  double elev_max = 0.78539816339744831;
  ElevationMapping mapping = ElevationMapping::linear;
};

struct SatelliteOrthoCamera {
  double ground_sample_distance = 0.5;  // meters per pixel
  std::size_t width = 64;
  std::size_t height = 64;
  double altitude = 100.0;  // ray-origin plane, world meters
};

struct RayBundle {
  std::size_t width = 0, height = 0, n_samples = 0;
  std::vector<Vec3> origins;     // one per ray, row-major pixel order
  std::vector<Vec3> directions;  // unit length
  std::vector<double> sample_t;  // rays * n_samples, strictly increasing
  std::vector<double> deltas;    // rays * n_samples, all positive

  std::size_t n_rays() const { return width * height; }
  std::pair<std::size_t, std::size_t> pixel_index(std::size_t ray) const {
    return {ray / width, ray % width};
  }
  Vec3 point(std::size_t ray, std::size_t sample) const;
};

// Azimuth of pixel column u (pixel centers), clockwise from north, in (-pi, pi].
double panorama_azimuth(std::size_t u, std::size_t width);
double panorama_elevation(std::size_t v, const PanoramaCamera& cam);

RayBundle panorama_rays(const PanoramaCamera& cam, const WorldFrame& frame,
                        std::size_t n_samples, double t_near, double t_far);

RayBundle satellite_rays(const SatelliteOrthoCamera& cam,
                         const WorldFrame& frame, std::size_t n_samples);

// Affine map of the scene box onto [-1,1]^3; points outside the box land
// outside the cube and set *outside.
Vec3 world_to_normalized(Vec3 p, const WorldFrame& frame,
                         bool* outside = nullptr);

}  // namespace s2d
