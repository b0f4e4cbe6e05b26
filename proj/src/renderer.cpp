#include "s2d/renderer.hpp"

#include <cmath>
#include <stdexcept>

namespace s2d {

double default_t_near() { return 0.1; }
double default_t_far(const WorldFrame& frame) { return frame.diagonal(); }

Tensor composite_weights(const Tensor& sigmas, const Tensor& deltas) {
  if (sigmas.shape() != deltas.shape() || sigmas.shape().size() != 2)
    throw std::invalid_argument("composite_weights: need matching (R,N) inputs");
  for (double v : sigmas.data())
    if (v < 0.0) throw std::invalid_argument("composite_weights: negative density");
  for (double v : deltas.data())
    if (v <= 0.0) throw std::invalid_argument("composite_weights: non-positive delta");
  Tensor a = sigmas * deltas;
  Tensor transmittance = exp(-cumsum_last(a, /*exclusive=*/true, /*reverse=*/false));
  return transmittance * (1.0 - exp(-a));
}

Integrated integrate_ray(const Tensor& weights, const Tensor& phis,
                         const Tensor& distances) {
  const Shape& ws = weights.shape();
  if (ws.size() != 2 || distances.shape() != ws)
    throw std::invalid_argument("integrate_ray: weights/distances must be (R,N)");
  const Shape& ps = phis.shape();
  if (ps.size() != 3 || ps[0] != ws[0] || ps[1] != ws[1])
    throw std::invalid_argument("integrate_ray: phis must be (R,N,C)");
  Tensor w3 = reshape(weights, {ws[0], ws[1], 1});
  Integrated out;
  out.feature = sum_axis(phis * w3, 1);
  out.opacity = sum_axis(weights, 1);
  out.depth = sum_axis(weights * distances, 1);
  return out;
}

static RenderOutput render_bundle(const TriPlane& planes,
                                  const FieldDecoder& decoder,
                                  const StyleVector& w, const RayBundle& rays,
                                  const WorldFrame& frame) {
  std::size_t n_rays = rays.n_rays(), n = rays.n_samples;
  std::vector<Vec3> pts;
  pts.reserve(n_rays * n);
  for (std::size_t r = 0; r < n_rays; ++r)
    for (std::size_t i = 0; i < n; ++i)
      pts.push_back(world_to_normalized(rays.point(r, i), frame));

  QueryResult q = query_points(planes, pts);
  FieldDecoder::Batch d = decoder.decode_batch(q.features, w);

  // the field is confined to the satellite footprint
  std::vector<double> inside(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) inside[i] = q.outside[i] ? 0.0 : 1.0;
  Tensor sigma = reshape(d.sigma * from_vector(std::move(inside), {pts.size(), 1}),
                         {n_rays, n});

  Tensor deltas = from_vector(rays.deltas, {n_rays, n});
  Tensor tau = composite_weights(sigma, deltas);
  std::size_t c = d.phi.shape()[1];
  Integrated acc = integrate_ray(tau, reshape(d.phi, {n_rays, n, c}),
                                 from_vector(rays.sample_t, {n_rays, n}));

  RenderOutput out;
  out.height = rays.height;
  out.width = rays.width;
  out.feature = reshape(transpose(acc.feature), {c, rays.height, rays.width});
  out.opacity = reshape(acc.opacity, {1, rays.height, rays.width});
  out.depth = reshape(acc.depth, {1, rays.height, rays.width});
  out.raw_color = slice0(out.feature, 0, 3);
  return out;
}

RenderOutput render_ground(const TriPlane& planes, const FieldDecoder& decoder,
                           const StyleVector& w, const RayBundle& rays,
                           const WorldFrame& frame) {
  return render_bundle(planes, decoder, w, rays, frame);
}

// ---- sky generator ----

SkyGenerator::SkyGenerator(const SkyGeneratorConfig& cfg_, Rng& rng) : cfg(cfg_) {
  if (cfg.height % 8 || cfg.width % 8)
    throw std::invalid_argument("sky generator: output size must be divisible by 8");
  constant = randn(rng, {cfg.channels, cfg.height / 8, cfg.width / 8}, 1.0);
  for (int i = 0; i < 3; ++i)
    blocks.push_back(ModulatedConv2d(cfg.channels, cfg.channels, 3, kStyleDim, rng));
  out_conv = Conv2d(cfg.channels, cfg.channels, 1, 1, 0, rng);
}

Tensor SkyGenerator::operator()(const Tensor& w) const {
  if (w.size() != kStyleDim)
    throw std::invalid_argument("sky generator: style vector must have 512 entries");
  Tensor x = constant;
  for (const auto& b : blocks) x = leaky_relu(b(upsample2x(x), w));
  return out_conv(x);
}

void SkyGenerator::collect(ParamMap& m, const std::string& prefix) const {
  m.add(prefix + ".constant", constant);
  for (std::size_t i = 0; i < blocks.size(); ++i)
    blocks[i].collect(m, prefix + ".block" + std::to_string(i));
  out_conv.collect(m, prefix + ".out");
}

Tensor render_sky(const SkyGenerator& gen, const StyleVector& w) {
  return gen(w.w);
}

Tensor blend(const RenderOutput& ground, const Tensor& sky_feature) {
  if (sky_feature.shape() != ground.feature.shape())
    throw std::invalid_argument("blend: ground/sky shapes differ, " +
                                shape_str(ground.feature.shape()) + " vs " +
                                shape_str(sky_feature.shape()));
  return ground.opacity * ground.feature + (1.0 - ground.opacity) * sky_feature;
}

// ---- super resolution ----

SuperResolver::SuperResolver(std::size_t channels, Rng& rng) {
  pre = Conv2d(channels, channels, 3, 1, 1, rng);
  post = Conv2d(channels, channels, 3, 1, 1, rng);
  head = Conv2d(channels, 3, 1, 1, 0, rng);
}

Tensor SuperResolver::operator()(const Tensor& feature) const {
  Tensor x = leaky_relu(pre(feature));
  x = upsample2x(x);
  x = leaky_relu(post(x));
  return head(x);
}

void SuperResolver::collect(ParamMap& m, const std::string& prefix) const {
  pre.collect(m, prefix + ".pre");
  post.collect(m, prefix + ".post");
  head.collect(m, prefix + ".head");
}

// ---- composed renders ----

StreetRender render_street(const TriPlane& planes, const FieldDecoder& decoder,
                           const StyleVector& w, const SkyGenerator* sky_gen,
                           const SuperResolver& sr, const PanoramaCamera& cam,
                           const WorldFrame& frame, std::size_t n_samples,
                           double t_near, double t_far) {
  RayBundle rays = panorama_rays(cam, frame, n_samples, t_near, t_far);
  StreetRender out;
  out.ground = render_bundle(planes, decoder, w, rays, frame);
  if (sky_gen) {
    out.sky_feature = render_sky(*sky_gen, w);
    out.blended = blend(out.ground, out.sky_feature);
  } else {
    out.blended = out.ground.feature;
  }
  out.raw_blend = slice0(out.blended, 0, 3);
  out.hi_res = sr(out.blended);
  return out;
}

RayBundle subset_rays(const RayBundle& b, const CropRegion& crop) {
  if (crop.row0 + crop.height > b.height || crop.col0 + crop.width > b.width)
    throw std::invalid_argument("subset_rays: crop outside image bounds");
  RayBundle s;
  s.width = crop.width;
  s.height = crop.height;
  s.n_samples = b.n_samples;
  for (std::size_t y = 0; y < crop.height; ++y)
    for (std::size_t x = 0; x < crop.width; ++x) {
      std::size_t ray = (crop.row0 + y) * b.width + (crop.col0 + x);
      s.origins.push_back(b.origins[ray]);
      s.directions.push_back(b.directions[ray]);
      auto t0 = b.sample_t.begin() + ray * b.n_samples;
      auto d0 = b.deltas.begin() + ray * b.n_samples;
      s.sample_t.insert(s.sample_t.end(), t0, t0 + b.n_samples);
      s.deltas.insert(s.deltas.end(), d0, d0 + b.n_samples);
    }
  return s;
}

RenderOutput render_satellite(const TriPlane& planes, const FieldDecoder& decoder,
                              const SatelliteOrthoCamera& cam,
                              const WorldFrame& frame, std::size_t n_samples,
                              const std::optional<CropRegion>& crop) {
  RayBundle rays = satellite_rays(cam, frame, n_samples);
  if (crop) rays = subset_rays(rays, *crop);
  return render_bundle(planes, decoder, null_style(), rays, frame);
}

}  // namespace s2d
