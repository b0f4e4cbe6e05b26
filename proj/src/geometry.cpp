#include "s2d/geometry.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace s2d {

Vec3 operator+(Vec3 a, Vec3 b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
Vec3 operator-(Vec3 a, Vec3 b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
Vec3 operator*(Vec3 a, double s) { return {a.x * s, a.y * s, a.z * s}; }
double norm(Vec3 a) { return std::sqrt(a.x * a.x + a.y * a.y + a.z * a.z); }

void WorldFrame::validate() const {
  if (!(box_max.x > box_min.x && box_max.y > box_min.y && box_max.z > box_min.z))
    throw std::invalid_argument("scene box must have positive extent");
  if (!(camera_height > 0.0 && camera_height < box_max.z - box_min.z))
    throw std::invalid_argument(
        "camera height must lie inside the vertical extent of the scene box");
}

Vec3 WorldFrame::center() const { return (box_min + box_max) * 0.5; }
Vec3 WorldFrame::extent() const { return box_max - box_min; }
double WorldFrame::diagonal() const { return norm(extent()); }

Vec3 RayBundle::point(std::size_t ray, std::size_t sample) const {
  double t = sample_t[ray * n_samples + sample];
  return origins[ray] + directions[ray] * t;
}

double panorama_azimuth(std::size_t u, std::size_t width) {
  return 2.0 * std::numbers::pi * (double(u) + 0.5) / double(width) -
         std::numbers::pi;
}

double panorama_elevation(std::size_t v, const PanoramaCamera& cam) {
  double f = (double(v) + 0.5) / double(cam.height);
  if (cam.mapping == ElevationMapping::linear)
    return cam.elev_max + f * (cam.elev_min - cam.elev_max);
  double ty = std::tan(cam.elev_max) + f * (std::tan(cam.elev_min) -
                                            std::tan(cam.elev_max));
  return std::atan(ty);
}

static void fill_uniform_samples(RayBundle& b, double t_near, double t_far) {
  std::size_t n = b.n_samples;
  double dt = (t_far - t_near) / double(n);
  std::vector<double> row(n), drow(n, dt);
  for (std::size_t i = 0; i < n; ++i) row[i] = t_near + (double(i) + 0.5) * dt;
  b.sample_t.reserve(b.n_rays() * n);
  b.deltas.reserve(b.n_rays() * n);
  for (std::size_t r = 0; r < b.n_rays(); ++r) {
    b.sample_t.insert(b.sample_t.end(), row.begin(), row.end());
    b.deltas.insert(b.deltas.end(), drow.begin(), drow.end());
  }
}

RayBundle panorama_rays(const PanoramaCamera& cam, const WorldFrame& frame,
                        std::size_t n_samples, double t_near, double t_far) {
  frame.validate();
  if (cam.width == 0 || cam.height == 0)
    throw std::invalid_argument("panorama_rays: image dimensions must be positive");
  if (n_samples < 2) throw std::invalid_argument("panorama_rays: n_samples >= 2");
  if (!(t_near > 0.0 && t_near < t_far))
    throw std::invalid_argument("panorama_rays: need 0 < t_near < t_far");
  if (!(cam.elev_min < 0.0 && cam.elev_max > 0.0))
    throw std::invalid_argument("panorama_rays: elevation range must straddle 0");

  RayBundle b;
  b.width = cam.width;
  b.height = cam.height;
  b.n_samples = n_samples;
  b.origins.assign(b.n_rays(), cam.position);
  b.directions.reserve(b.n_rays());
  for (std::size_t v = 0; v < cam.height; ++v) {
    double phi = panorama_elevation(v, cam);
    double cph = std::cos(phi), sph = std::sin(phi);
    for (std::size_t u = 0; u < cam.width; ++u) {
      double theta = panorama_azimuth(u, cam.width) + cam.heading_offset;
      b.directions.push_back({std::sin(theta) * cph, std::cos(theta) * cph, sph});
    }
  }
  fill_uniform_samples(b, t_near, t_far);
  return b;
}

RayBundle satellite_rays(const SatelliteOrthoCamera& cam,
                         const WorldFrame& frame, std::size_t n_samples) {
  frame.validate();
  if (cam.width == 0 || cam.height == 0)
    throw std::invalid_argument("satellite_rays: image dimensions must be positive");
  if (n_samples < 2) throw std::invalid_argument("satellite_rays: n_samples >= 2");
  double fw = double(cam.width) * cam.ground_sample_distance;
  double fh = double(cam.height) * cam.ground_sample_distance;
  Vec3 ext = frame.extent();
  if (fw > ext.x + 1e-9 || fh > ext.y + 1e-9)
    throw std::invalid_argument("satellite footprint exceeds the scene box");
  if (cam.altitude < frame.box_max.z)
    throw std::invalid_argument("satellite altitude below the scene box top");

  RayBundle b;
  b.width = cam.width;
  b.height = cam.height;
  b.n_samples = n_samples;
  Vec3 c = frame.center();
  double gsd = cam.ground_sample_distance;
  for (std::size_t row = 0; row < cam.height; ++row) {
    double y = c.y + fh / 2.0 - (double(row) + 0.5) * gsd;  // row 0 = north
    for (std::size_t col = 0; col < cam.width; ++col) {
      double x = c.x - fw / 2.0 + (double(col) + 0.5) * gsd;  // col 0 = west
      b.origins.push_back({x, y, cam.altitude});
      b.directions.push_back({0.0, 0.0, -1.0});
    }
  }
  fill_uniform_samples(b, cam.altitude - frame.box_max.z,
                       cam.altitude - frame.box_min.z);
  return b;
}

Vec3 world_to_normalized(Vec3 p, const WorldFrame& frame, bool* outside) {
  Vec3 e = frame.extent();
  Vec3 n{2.0 * (p.x - frame.box_min.x) / e.x - 1.0,
         2.0 * (p.y - frame.box_min.y) / e.y - 1.0,
         2.0 * (p.z - frame.box_min.z) / e.z - 1.0};
  if (outside)
    *outside = std::abs(n.x) > 1.0 || std::abs(n.y) > 1.0 || std::abs(n.z) > 1.0;
  return n;
}

}  // namespace s2d
