#pragma once

#include <array>
#include <limits>
#include <vector>

#include "s2d/geometry.hpp"
#include "s2d/illumination.hpp"
#include "s2d/image.hpp"

namespace s2d {

using Color = std::array<double, 3>;  // [0,1]

struct Box {
  Vec3 min, max;
  Color albedo;

  bool contains(Vec3 p) const;
};

// Axis-aligned colored boxes on a colored ground plane at the scene floor,
// under a vertical-gradient sky. Closed-form geometry for oracle renders.
struct BoxScene {
  WorldFrame frame;
  Color ground_albedo{0.45, 0.42, 0.35};
  std::vector<Box> boxes;
  Color sky_horizon{0.85, 0.88, 0.95};
  Color sky_zenith{0.25, 0.45, 0.85};

  Color sky_color(double azimuth, double elevation) const;
  void validate() const;
};

// Top-down orthographic projection; each pixel takes the albedo of the
// highest surface under it. Heights are relative to the scene floor.
struct SatelliteRaster {
  Image image;                 // 3 x H x W
  std::vector<double> height;  // H x W
};
SatelliteRaster rasterize_satellite(const BoxScene& scene,
                                    const SatelliteOrthoCamera& cam);

// Exact ray/box and ray/ground intersections per pixel; misses are sky.
struct PanoramaTrace {
  Image image;                // 3 x H x W
  std::vector<double> depth;  // H x W, +inf on sky pixels
  SkyMask mask;
};
PanoramaTrace raytrace_panorama(const BoxScene& scene, const PanoramaCamera& cam);

inline constexpr double kNoHit = std::numeric_limits<double>::infinity();

// First hit distance of a ray against the scene; kNoHit if the ray escapes.
double first_hit(const BoxScene& scene, Vec3 origin, Vec3 dir,
                 const Box** hit_box = nullptr);

// Procedural fixture: colored boxes in the outer ring of the frame, keeping
// the central disk free so street cameras placed there stay in open space.
BoxScene default_box_scene(const WorldFrame& frame, std::uint64_t seed);

}  // namespace s2d
