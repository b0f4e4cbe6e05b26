#include "s2d/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "s2d/nn.hpp"

namespace s2d {

bool Box::contains(Vec3 p) const {
  return p.x > min.x && p.x < max.x && p.y > min.y && p.y < max.y &&
         p.z > min.z && p.z < max.z;
}

Color BoxScene::sky_color(double /*azimuth*/, double elevation) const {
  double t = std::clamp(elevation / (std::numbers::pi / 2.0), 0.0, 1.0);
  return {sky_horizon[0] + t * (sky_zenith[0] - sky_horizon[0]),
          sky_horizon[1] + t * (sky_zenith[1] - sky_horizon[1]),
          sky_horizon[2] + t * (sky_zenith[2] - sky_horizon[2])};
}

void BoxScene::validate() const {
  frame.validate();
  for (const auto& b : boxes) {
    if (!(b.max.x > b.min.x && b.max.y > b.min.y && b.max.z > b.min.z))
      throw std::invalid_argument("box with non-positive extent");
    if (b.min.x < frame.box_min.x || b.min.y < frame.box_min.y ||
        b.min.z < frame.box_min.z || b.max.x > frame.box_max.x ||
        b.max.y > frame.box_max.y || b.max.z > frame.box_max.z)
      throw std::invalid_argument("box outside the scene bounds");
  }
}

// Slab-method ray/AABB; returns entry distance or kNoHit.
static double ray_box(Vec3 o, Vec3 d, const Box& b) {
  double t0 = 0.0, t1 = kNoHit;
  const double om[3] = {o.x, o.y, o.z};
  const double dm[3] = {d.x, d.y, d.z};
  const double lo[3] = {b.min.x, b.min.y, b.min.z};
  const double hi[3] = {b.max.x, b.max.y, b.max.z};
  for (int a = 0; a < 3; ++a) {
    if (dm[a] == 0.0) {
      if (om[a] < lo[a] || om[a] > hi[a]) return kNoHit;
      continue;
    }
    double ta = (lo[a] - om[a]) / dm[a];
    double tb = (hi[a] - om[a]) / dm[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) return kNoHit;
  }
  return t0 > 0.0 ? t0 : kNoHit;
}

double first_hit(const BoxScene& scene, Vec3 origin, Vec3 dir,
                 const Box** hit_box) {
  double best = kNoHit;
  const Box* who = nullptr;
  for (const auto& b : scene.boxes) {
    double t = ray_box(origin, dir, b);
    if (t < best) {
      best = t;
      who = &b;
    }
  }
  // ground plane at the scene floor
  double floor_z = scene.frame.box_min.z;
  if (dir.z < 0.0) {
    double t = (floor_z - origin.z) / dir.z;
    if (t > 0.0 && t < best) {
      Vec3 p = origin + dir * t;
      if (p.x >= scene.frame.box_min.x && p.x <= scene.frame.box_max.x &&
          p.y >= scene.frame.box_min.y && p.y <= scene.frame.box_max.y) {
        best = t;
        who = nullptr;
      }
    }
  }
  if (hit_box) *hit_box = who;
  return best;
}

SatelliteRaster rasterize_satellite(const BoxScene& scene,
                                    const SatelliteOrthoCamera& cam) {
  scene.validate();
  RayBundle rays = satellite_rays(cam, scene.frame, 2);
  SatelliteRaster out;
  out.image = Image(3, cam.height, cam.width);
  out.height.assign(cam.height * cam.width, 0.0);
  double floor_z = scene.frame.box_min.z;
  for (std::size_t r = 0; r < rays.n_rays(); ++r) {
    Vec3 o = rays.origins[r];
    Color c = scene.ground_albedo;
    double top = floor_z;
    for (const auto& b : scene.boxes) {
      if (o.x >= b.min.x && o.x <= b.max.x && o.y >= b.min.y && o.y <= b.max.y &&
          b.max.z > top) {
        top = b.max.z;
        c = b.albedo;
      }
    }
    auto [row, col] = rays.pixel_index(r);
    for (std::size_t ch = 0; ch < 3; ++ch) out.image.at(ch, row, col) = c[ch];
    out.height[row * cam.width + col] = top - floor_z;
  }
  return out;
}

PanoramaTrace raytrace_panorama(const BoxScene& scene, const PanoramaCamera& cam) {
  scene.validate();
  for (const auto& b : scene.boxes)
    if (b.contains(cam.position))
      throw std::invalid_argument("panorama camera inside a box");

  PanoramaTrace out;
  out.image = Image(3, cam.height, cam.width);
  out.depth.assign(cam.height * cam.width, kNoHit);
  out.mask.width = cam.width;
  out.mask.height = cam.height;
  out.mask.values.assign(cam.height * cam.width, 0);

  for (std::size_t v = 0; v < cam.height; ++v) {
    double phi = panorama_elevation(v, cam);
    for (std::size_t u = 0; u < cam.width; ++u) {
      double theta = panorama_azimuth(u, cam.width) + cam.heading_offset;
      Vec3 dir{std::sin(theta) * std::cos(phi), std::cos(theta) * std::cos(phi),
               std::sin(phi)};
      const Box* box = nullptr;
      double t = first_hit(scene, cam.position, dir, &box);
      std::size_t px = v * cam.width + u;
      Color c;
      if (t == kNoHit) {
        c = scene.sky_color(theta, phi);
        out.mask.values[px] = 1;
      } else {
        c = box ? box->albedo : scene.ground_albedo;
        out.depth[px] = t;
      }
      for (std::size_t ch = 0; ch < 3; ++ch) out.image.at(ch, v, u) = c[ch];
    }
  }
  return out;
}

BoxScene default_box_scene(const WorldFrame& frame, std::uint64_t seed) {
  BoxScene scene;
  scene.frame = frame;
  Rng rng(seed);
  Vec3 c = frame.center(), e = frame.extent();
  double clear_r = 0.3 * std::min(e.x, e.y) / 2.0;  // free disk for cameras
  double floor_z = frame.box_min.z;

  std::size_t n = 4 + rng.next_u64() % 3;
  while (scene.boxes.size() < n) {
    double sx = (0.08 + 0.14 * rng.uniform()) * e.x;
    double sy = (0.08 + 0.14 * rng.uniform()) * e.y;
    double h = (0.2 + 0.5 * rng.uniform()) * e.z;
    double x0 = frame.box_min.x + rng.uniform() * (e.x - sx);
    double y0 = frame.box_min.y + rng.uniform() * (e.y - sy);
    // nearest point of the footprint to the frame center must clear the disk
    double nx = std::clamp(c.x, x0, x0 + sx), ny = std::clamp(c.y, y0, y0 + sy);
    if (std::hypot(nx - c.x, ny - c.y) <= clear_r) continue;
    Color albedo{0.15 + 0.75 * rng.uniform(), 0.15 + 0.75 * rng.uniform(),
                 0.15 + 0.75 * rng.uniform()};
    scene.boxes.push_back({{x0, y0, floor_z}, {x0 + sx, y0 + sy, floor_z + h}, albedo});
  }
  scene.validate();
  return scene;
}

}  // namespace s2d
