#pragma once

#include <optional>

#include "s2d/decoder.hpp"
#include "s2d/geometry.hpp"
#include "s2d/triplane.hpp"

namespace s2d {

struct RenderOutput {
  Tensor feature;    // (32, H, W)
  Tensor opacity;    // (1, H, W), in [0,1]
  Tensor depth;      // (1, H, W), meters
  Tensor raw_color;  // (3, H, W), channels 0-2 of feature
  std::size_t height = 0, width = 0;
};

// tau_i = T_i * (1 - exp(-sigma_i * delta_i)), T_i the exclusive
// transmittance product, so sum_i tau_i = 1 - exp(-sum_i sigma_i delta_i).
Tensor composite_weights(const Tensor& sigmas, const Tensor& deltas);  // (R,N)

struct Integrated {
  Tensor feature;  // (R, C)
  Tensor opacity;  // (R)
  Tensor depth;    // (R)
};
Integrated integrate_ray(const Tensor& weights, const Tensor& phis,
                         const Tensor& distances);

RenderOutput render_ground(const TriPlane& planes, const FieldDecoder& decoder,
                           const StyleVector& w, const RayBundle& rays,
                           const WorldFrame& frame);

// Style-modulated 2D synthesis from a learned constant; no spatial input.
struct SkyGeneratorConfig {
  std::size_t height = 64, width = 256;  // output size, 3 upsampling blocks
  std::size_t channels = 32;
};

struct SkyGenerator {
  SkyGeneratorConfig cfg;
  Tensor constant;  // (channels, height/8, width/8), learned
  std::vector<ModulatedConv2d> blocks;
  Conv2d out_conv;  // 1x1 output convolution

  SkyGenerator() = default;
  SkyGenerator(const SkyGeneratorConfig& cfg, Rng& rng);
  Tensor operator()(const Tensor& w) const;  // (512) -> (channels, H, W)
  void collect(ParamMap& m, const std::string& prefix) const;
};

Tensor render_sky(const SkyGenerator& gen, const StyleVector& w);

// Per-pixel convex combination with ground opacity as alpha.
Tensor blend(const RenderOutput& ground, const Tensor& sky_feature);

// Two convolutions around a 2x bilinear upsample plus a 3-channel head.
struct SuperResolver {
  Conv2d pre, post, head;

  SuperResolver() = default;
  SuperResolver(std::size_t channels, Rng& rng);
  Tensor operator()(const Tensor& feature) const;  // (32,H,W) -> (3,2H,2W)
  void collect(ParamMap& m, const std::string& prefix) const;
};

struct StreetRender {
  Tensor hi_res;         // (3, 2H, 2W)
  Tensor raw_blend;      // (3, H, W)
  Tensor blended;        // (32, H, W)
  Tensor sky_feature;    // (32, H, W); undefined when the sky branch is off
  RenderOutput ground;
};

// Full pipeline; pass sky_gen = nullptr to ablate the sky branch.
StreetRender render_street(const TriPlane& planes, const FieldDecoder& decoder,
                           const StyleVector& w, const SkyGenerator* sky_gen,
                           const SuperResolver& sr, const PanoramaCamera& cam,
                           const WorldFrame& frame, std::size_t n_samples,
                           double t_near, double t_far);

struct CropRegion {
  std::size_t row0 = 0, col0 = 0, height = 0, width = 0;
};

RayBundle subset_rays(const RayBundle& b, const CropRegion& crop);

// Satellite views always render with the null style; no sky, no SR.
RenderOutput render_satellite(const TriPlane& planes, const FieldDecoder& decoder,
                              const SatelliteOrthoCamera& cam,
                              const WorldFrame& frame, std::size_t n_samples,
                              const std::optional<CropRegion>& crop = {});

double default_t_near();
double default_t_far(const WorldFrame& frame);

}  // namespace s2d
