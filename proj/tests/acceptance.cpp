// Acceptance gate: one pass/fail line per criterion, exit code = #failures.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "s2d/io.hpp"
#include "s2d/metrics.hpp"
#include "s2d/renderer.hpp"
#include "s2d/synthetic.hpp"
#include "s2d/training.hpp"

using namespace s2d;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const std::string& name, bool pass, const std::string& detail) {
  std::printf("criterion %2d %-34s %s  (%s)\n", id, name.c_str(),
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <typename F>
void guarded(int id, const std::string& name, F body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, name, false, std::string("exception: ") + e.what());
  }
}

double rel_err(double got, double want) {
  return std::abs(got - want) / std::max({std::abs(got), std::abs(want), 1e-8});
}

// ---- shared overfit experiment (criteria 4-8) ----

TrainConfig overfit_config() {
  TrainConfig cfg;
  cfg.frame.box_min = {-16, -16, 0};
  cfg.frame.box_max = {16, 16, 8};
  cfg.sat_size = 32;
  cfg.pano_height = 8;  // renders 8x32, ground truth 16x64
  cfg.n_samples = 16;
  cfg.decoder_hidden = 64;
  cfg.unet_depth = 2;
  cfg.unet_base_channels = 12;
  cfg.use_gan = false;  // geometry/reconstruction study; GAN exercised elsewhere
  cfg.iterations = 1000;
  cfg.lr_generator = 1e-3;  // 2e-3 oscillates late in the schedule
  cfg.seed = 11;
  cfg.validate();
  return cfg;
}

struct Experiment {
  BoxScene scene;
  TrainConfig cfg;
  SyntheticSample sample;      // the scene under the default sky
  SyntheticSample alt_sample;  // same geometry under an inverted sky gradient
  double east = 0.0, north = 0.0, heading = 0.3;

  // alternate the two illumination fixtures so the style path stays in use
  TrainState train(const TrainConfig& variant) const {
    TrainState state = TrainState::init(variant);
    auto pool = illumination_pool({sample.sample, alt_sample.sample});
    for (std::size_t i = 0; i < variant.iterations; ++i) {
      const LoadedSample* s = i % 2 ? &alt_sample.sample : &sample.sample;
      train_step(state, {s}, pool);
    }
    return state;
  }

  StyleVector style_of(const Model& model, const LoadedSample& s) const {
    Image pano = s.street;
    for (auto& v : pano.values) v *= 255.0;
    return model.mapper(extract_illumination(pano, s.mask));
  }

  StyleVector real_style(const Model& model) const {
    return style_of(model, sample.sample);
  }

  StreetRender render(const TrainState& state, const StyleVector& style) const {
    TriPlane planes =
        state.model.triplane_gen.generate(image_to_tensor(sample.sample.sat));
    return render_street_for_sample(state, planes, sample.sample, style);
  }

  double street_l1(const TrainState& state) const {
    StreetRender r = render(state, real_style(state.model));
    Tensor gt = image_to_tensor(sample.sample.street);
    return mean(abs(r.hi_res - gt)).item();
  }

  // oracle mask/depth at the raw render resolution
  PanoramaTrace oracle_raw() const {
    PanoramaCamera cam = cfg.street_camera(east, north, heading);
    return raytrace_panorama(scene, cam);
  }

  double opacity_accuracy(const TrainState& state) const {
    StreetRender r = render(state, real_style(state.model));
    // oracle sky mask of the ground-truth panorama at the render resolution
    SkyMask oracle = downsample_mask2(sample.sample.mask);
    std::size_t agree = 0, n = r.ground.opacity.size();
    for (std::size_t i = 0; i < n; ++i) {
      bool solid = r.ground.opacity.data()[i] > 0.5;
      bool gt_solid = oracle.values[i] == 0;
      agree += solid == gt_solid;
    }
    return double(agree) / double(n);
  }

  double median_depth_error(const TrainState& state) const {
    StreetRender r = render(state, real_style(state.model));
    PanoramaTrace oracle = oracle_raw();
    std::vector<double> errs;
    for (std::size_t i = 0; i < oracle.depth.size(); ++i)
      if (oracle.depth[i] != kNoHit)
        errs.push_back(std::abs(r.ground.depth.data()[i] - oracle.depth[i]));
    std::sort(errs.begin(), errs.end());
    return errs[errs.size() / 2] / cfg.frame.diagonal();
  }

  double satellite_psnr(const TrainState& state) const {
    TriPlane planes =
        state.model.triplane_gen.generate(image_to_tensor(sample.sample.sat));
    SatelliteOrthoCamera cam = cfg.satellite_camera();
    cam.width /= 4;
    cam.height /= 4;
    cam.ground_sample_distance *= 4.0;
    RenderOutput sat =
        render_satellite(planes, state.model.decoder, cam, cfg.frame, cfg.n_samples);
    Tensor gt = avgpool2(avgpool2(image_to_tensor(sample.sample.sat)));
    return psnr(tensor_to_image(sat.raw_color), tensor_to_image(gt));
  }
};

Experiment make_experiment() {
  Experiment e;
  e.cfg = overfit_config();
  e.scene = default_box_scene(e.cfg.frame, 7);
  e.sample = make_synthetic_sample(e.scene, e.cfg, e.east, e.north, e.heading);
  BoxScene alt = e.scene;
  std::swap(alt.sky_horizon, alt.sky_zenith);
  e.alt_sample = make_synthetic_sample(alt, e.cfg, e.east, e.north, e.heading);
  return e;
}

}  // namespace

// ---- criteria ----

static void criterion_1() {
  auto t0 = Clock::now();
  bool ok = true;
  std::ostringstream why;

  double ln2 = std::log(2.0);
  Tensor tau = composite_weights(full({1, 2}, ln2), full({1, 2}, 1.0));
  ok &= rel_err(tau.data()[0], 0.5) < 1e-12 && rel_err(tau.data()[1], 0.25) < 1e-12;

  Rng rng(3);
  Tensor sig = randn(rng, {4, 8}, 0.0, false);
  for (auto& v : sig.data()) v = rng.uniform() * 2.0;
  Tensor del = randn(rng, {4, 8}, 0.0, false);
  for (auto& v : del.data()) v = 0.1 + rng.uniform();
  Tensor t = composite_weights(sig, del);
  for (std::size_t r = 0; r < 4; ++r) {
    double s = 0, optical = 0;
    for (std::size_t i = 0; i < 8; ++i) {
      s += t.data()[r * 8 + i];
      optical += sig.data()[r * 8 + i] * del.data()[r * 8 + i];
    }
    if (std::abs(s + std::exp(-optical) - 1.0) > 1e-6) {
      ok = false;
      why << "telescoping violated; ";
    }
  }

  Tensor vac = composite_weights(zeros({1, 4}), full({1, 4}, 1.0));
  for (double v : vac.data()) ok &= v == 0.0;  // vacuum
  ok &= std::abs(composite_weights(full({1, 1}, 40.0), full({1, 1}, 1.0)).data()[0] -
                 1.0) < 1e-8;  // opaque slab

  RenderOutput g;
  g.height = 2;
  g.width = 2;
  g.feature = randn(rng, {3, 2, 2}, 1.0, false);
  Tensor sky = randn(rng, {3, 2, 2}, 1.0, false);
  g.opacity = full({1, 2, 2}, 1.0);
  ok &= blend(g, sky).data() == g.feature.data();
  g.opacity = full({1, 2, 2}, 0.0);
  ok &= blend(g, sky).data() == sky.data();

  double dt = seconds_since(t0);
  ok &= dt < 1.0;
  std::ostringstream d;
  d << why.str() << dt << " s";
  report(1, "rendering math oracles", ok, d.str());
}

static void criterion_2() {
  auto t0 = Clock::now();
  double worst = 0.0;
  Rng rng(17);

  WorldFrame frame;
  frame.box_min = {-8, -8, 0};
  frame.box_max = {8, 8, 4};

  // (a) tri-plane texel -> hi-res pixel (4x4 rays, 8 samples)
  {
    FieldDecoder dec(DecoderVariant::adaptive, 6, 8, rng);
    SuperResolver sr(32, rng);
    PanoramaCamera cam;
    cam.position = {0, 0, 1.6};
    cam.width = 4;
    cam.height = 4;
    std::vector<double> fixed = randn(rng, {2, 4, 4}, 0.5, false).data();
    std::vector<double> pick(3 * 8 * 8, 0.0);
    pick[1 * 8 * 8 + 3 * 8 + 5] = 1.0;  // channel 1, row 3, col 5 of hi-res
    Tensor mask = from_vector(pick, {3, 8, 8});
    auto run = [&](const Tensor& xy) {
      TriPlane planes{xy, from_vector(fixed, {2, 4, 4}), from_vector(fixed, {2, 4, 4})};
      StreetRender out = render_street(planes, dec, null_style(), nullptr, sr,
                                       cam, frame, 8, 0.1, frame.diagonal());
      return sum(out.hi_res * mask);
    };
    Tensor xy = leaf(fixed, {2, 4, 4}, true);
    auto g = grad(run(xy), {xy});
    std::vector<double> x = fixed;
    for (std::size_t i = 0; i < x.size(); ++i) {
      double keep = x[i], eps = 1e-5;
      x[i] = keep + eps;
      double hi = run(from_vector(x, {2, 4, 4})).item();
      x[i] = keep - eps;
      double lo = run(from_vector(x, {2, 4, 4})).item();
      x[i] = keep;
      worst = std::max(worst, rel_err(g[0].data()[i], (hi - lo) / (2 * eps)));
    }
  }

  // (b) decoder parameters -> total loss (16 rays, 6 samples)
  {
    FieldDecoder dec(DecoderVariant::adaptive, 6, 8, rng);
    TriPlane planes{randn(rng, {2, 6, 6}, 0.5, false),
                    randn(rng, {2, 6, 6}, 0.5, false),
                    randn(rng, {2, 6, 6}, 0.5, false)};
    PanoramaCamera cam;
    cam.position = {0, 0, 1.6};
    cam.width = 8;
    cam.height = 2;
    RayBundle rays = panorama_rays(cam, frame, 6, 0.1, frame.diagonal());
    Tensor gt = randn(rng, {3, 2, 8}, 0.3, false);
    SkyMask m;
    m.height = 2;
    m.width = 8;
    m.values.assign(16, 0);
    for (std::size_t i = 0; i < 8; ++i) m.values[i] = 1;
    PerceptualDistance perc(3, 77);
    LossWeights w;
    auto loss = [&]() {
      RenderOutput out = render_ground(planes, dec, null_style(), rays, frame);
      LossParts parts;
      parts.str = reconstruction_loss(out.raw_color, gt, perc);
      parts.opa = opacity_loss(out.opacity, m);
      return total_loss(parts, w).total;
    };
    for (Tensor* p : {&dec.first.weight, &dec.density_head.weight,
                      &dec.color_head.weight, &dec.first.bias}) {
      auto g = grad(loss(), {*p});
      for (std::size_t idx :
           {std::size_t(0), p->size() / 3, p->size() / 2, p->size() - 1}) {
        double keep = p->data()[idx], eps = 1e-5;
        p->data()[idx] = keep + eps;
        double hi = loss().item();
        p->data()[idx] = keep - eps;
        double lo = loss().item();
        p->data()[idx] = keep;
        worst = std::max(worst, rel_err(g[0].data()[idx], (hi - lo) / (2 * eps)));
      }
    }
  }

  // (c) R1 double gradient
  {
    Discriminator d(3, 4, rng);
    Tensor real = randn(rng, {3, 8, 8}, 1.0, false);
    Tensor fake = randn(rng, {3, 8, 8}, 1.0, false);
    Tensor r1 = gan_losses(d, real, fake, 2.0).r1_penalty;
    for (Tensor* p : {&d.convs[0].weight, &d.head.weight}) {
      auto g = grad(r1, {*p});
      for (std::size_t idx : {std::size_t(0), p->size() / 2, p->size() - 1}) {
        double keep = p->data()[idx], eps = 1e-4;
        p->data()[idx] = keep + eps;
        double hi = gan_losses(d, real, fake, 2.0).r1_penalty.item();
        p->data()[idx] = keep - eps;
        double lo = gan_losses(d, real, fake, 2.0).r1_penalty.item();
        p->data()[idx] = keep;
        worst = std::max(worst, rel_err(g[0].data()[idx], (hi - lo) / (2 * eps)));
      }
    }
  }

  double dt = seconds_since(t0);
  std::ostringstream d;
  d << "max rel err " << worst << ", " << dt << " s";
  report(2, "finite-difference gradients", worst <= 1e-3 && dt < 30.0, d.str());
}

static void criterion_3() {
  Rng rng(23);
  FieldDecoder dec(DecoderVariant::adaptive, 96, 32, rng);
  bool ok = true;
  for (int i = 0; i < 100; ++i) {
    Tensor f = randn(rng, {7, 96}, 1.0, false);
    StyleVector w1, w2;
    w1.w = randn(rng, {kStyleDim}, 1.0, false);
    w2.w = randn(rng, {kStyleDim}, 1.0, false);
    ok &= dec.decode_batch(f, w1).sigma.data() == dec.decode_batch(f, w2).sigma.data();
  }

  // full street pipeline: swapping the illumination leaves geometry untouched
  WorldFrame frame;
  frame.box_min = {-8, -8, 0};
  frame.box_max = {8, 8, 4};
  TriPlane planes{randn(rng, {2, 8, 8}, 0.5, false), randn(rng, {2, 8, 8}, 0.5, false),
                  randn(rng, {2, 8, 8}, 0.5, false)};
  FieldDecoder dec6(DecoderVariant::adaptive, 6, 8, rng);
  SkyGenerator sky({8, 32, 32}, rng);
  SuperResolver sr(32, rng);
  PanoramaCamera cam;
  cam.position = {0, 0, 1.6};
  cam.width = 32;
  cam.height = 8;
  StyleVector w1, w2;
  w1.w = randn(rng, {kStyleDim}, 1.0, false);
  w2.w = randn(rng, {kStyleDim}, 1.0, false);
  StreetRender a = render_street(planes, dec6, w1, &sky, sr, cam, frame, 8, 0.1,
                                 frame.diagonal());
  StreetRender b = render_street(planes, dec6, w2, &sky, sr, cam, frame, 8, 0.1,
                                 frame.diagonal());
  ok &= a.ground.opacity.data() == b.ground.opacity.data();
  ok &= a.ground.depth.data() == b.ground.depth.data();
  report(3, "density illumination invariance", ok,
         "100 triples + street render swap, bitwise");
}

int main() {
  criterion_1();
  criterion_2();
  criterion_3();

  // ---- shared training runs ----
  auto t0 = Clock::now();
  Experiment exp = make_experiment();

  TrainState initial = TrainState::init(exp.cfg);
  double l1_start = exp.street_l1(initial);

  TrainState full = exp.train(exp.cfg);

  TrainConfig no_sat = exp.cfg;
  no_sat.use_sat_loss = false;
  TrainState sat_ablated = exp.train(no_sat);

  TrainConfig no_opa = exp.cfg;
  no_opa.use_opacity_loss = false;
  TrainState opa_ablated = exp.train(no_opa);
  std::printf("(3 training runs of %zu iterations: %.1f s)\n",
              exp.cfg.iterations, seconds_since(t0));

  guarded(4, "overfit geometry", [&] {
    double l1_end = exp.street_l1(full);
    double acc = exp.opacity_accuracy(full);
    double depth_err = exp.median_depth_error(full);
    bool ok = l1_end < 0.25 * l1_start && acc >= 0.90 && depth_err <= 0.15;
    std::ostringstream d;
    d << "L1 " << l1_start << " -> " << l1_end << ", opacity acc " << acc
      << ", median depth err " << depth_err << " of diagonal";
    report(4, "overfit geometry", ok, d.str());
  });

  guarded(5, "satellite-loss ablation", [&] {
    double with_loss = exp.satellite_psnr(full);
    double without = exp.satellite_psnr(sat_ablated);
    std::ostringstream d;
    d << "sat PSNR " << with_loss << " dB vs " << without << " dB ablated";
    report(5, "satellite-loss ablation", with_loss >= without + 1.0, d.str());
  });

  guarded(6, "opacity-loss ablation", [&] {
    double with_loss = exp.opacity_accuracy(full);
    double without = exp.opacity_accuracy(opa_ablated);
    std::ostringstream d;
    d << "opacity acc " << with_loss << " vs " << without << " ablated";
    report(6, "opacity-loss ablation",
           with_loss >= 0.90 && with_loss - without >= 0.10, d.str());
  });

  guarded(7, "multi-view consistency", [&] {
    TriPlane planes = full.model.triplane_gen.generate(
        image_to_tensor(exp.sample.sample.sat));
    PanoramaCamera cam = exp.cfg.street_camera(exp.east, exp.north, 0.0);
    PanoramaCamera turned = exp.cfg.street_camera(exp.east, exp.north,
                                                  std::numbers::pi / 2);
    double t_near = default_t_near(), t_far = default_t_far(exp.cfg.frame);
    RayBundle r0 = panorama_rays(cam, exp.cfg.frame, exp.cfg.n_samples, t_near, t_far);
    RayBundle r1 = panorama_rays(turned, exp.cfg.frame, exp.cfg.n_samples, t_near, t_far);
    RenderOutput o0 = render_ground(planes, full.model.decoder, null_style(), r0,
                                    exp.cfg.frame);
    RenderOutput o1 = render_ground(planes, full.model.decoder, null_style(), r1,
                                    exp.cfg.frame);
    std::size_t h = o0.height, w = o0.width, shift = w / 4;
    double max_dev = 0;
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t y = 0; y < h; ++y)
        for (std::size_t x = 0; x < w; ++x)
          max_dev = std::max(
              max_dev,
              std::abs(o1.raw_color.data()[(c * h + y) * w + x] -
                       o0.raw_color.data()[(c * h + y) * w + (x + shift) % w]));
    std::ostringstream d;
    d << "max abs deviation " << max_dev << " over " << w / 4 << "-column shift";
    report(7, "multi-view consistency", max_dev <= 1e-5, d.str());
  });

  guarded(8, "illumination controllability", [&] {
    StyleVector lit = exp.real_style(full.model);
    StyleVector dusk = exp.style_of(full.model, exp.alt_sample.sample);

    StreetRender a = exp.render(full, lit);
    StreetRender b = exp.render(full, dusk);
    double diff = mean(abs(a.hi_res - b.hi_res)).item();
    bool depth_same = a.ground.depth.data() == b.ground.depth.data();
    std::ostringstream d;
    d << "hi-res mean abs diff " << diff << ", depth bit-identical "
      << (depth_same ? "yes" : "no");
    report(8, "illumination controllability", diff > 1e-3 && depth_same, d.str());
  });

  guarded(9, "metrics conformance", [&] {
    Image a(3, 16, 16, 0.4), b(3, 16, 16, 0.5);
    bool ok = std::abs(psnr(a, b) - 20.0) < 1e-9;

    Rng rng(5);
    Image x(3, 16, 16), y(3, 16, 16);
    for (auto& v : x.values) v = rng.uniform();
    for (auto& v : y.values) v = rng.uniform();
    // independent loop-based SSIM oracle
    std::vector<double> gx(256, 0.0), gy(256, 0.0);
    for (std::size_t c = 0; c < 3; ++c)
      for (std::size_t i = 0; i < 256; ++i) {
        gx[i] += x.values[c * 256 + i] / 3.0;
        gy[i] += y.values[c * 256 + i] / 3.0;
      }
    std::vector<double> k(121);
    double ks = 0;
    for (int yy = 0; yy < 11; ++yy)
      for (int xx = 0; xx < 11; ++xx) {
        double dy = yy - 5, dx = xx - 5;
        k[yy * 11 + xx] = std::exp(-(dx * dx + dy * dy) / 4.5);
        ks += k[yy * 11 + xx];
      }
    for (auto& v : k) v /= ks;
    double c1 = 1e-4, c2 = 9e-4, acc = 0;
    std::size_t nwin = 0;
    for (std::size_t y0 = 0; y0 + 11 <= 16; ++y0)
      for (std::size_t x0 = 0; x0 + 11 <= 16; ++x0) {
        double mua = 0, mub = 0, va = 0, vb = 0, cov = 0;
        for (std::size_t yy = 0; yy < 11; ++yy)
          for (std::size_t xx = 0; xx < 11; ++xx) {
            double w = k[yy * 11 + xx];
            mua += w * gx[(y0 + yy) * 16 + x0 + xx];
            mub += w * gy[(y0 + yy) * 16 + x0 + xx];
          }
        for (std::size_t yy = 0; yy < 11; ++yy)
          for (std::size_t xx = 0; xx < 11; ++xx) {
            double w = k[yy * 11 + xx];
            double pa = gx[(y0 + yy) * 16 + x0 + xx] - mua;
            double pb = gy[(y0 + yy) * 16 + x0 + xx] - mub;
            va += w * pa * pa;
            vb += w * pb * pb;
            cov += w * pa * pb;
          }
        acc += ((2 * mua * mub + c1) * (2 * cov + c2)) /
               ((mua * mua + mub * mub + c1) * (va + vb + c2));
        ++nwin;
      }
    ok &= std::abs(ssim(x, y) - acc / double(nwin)) < 1e-6;

    std::vector<double> ta{1, 0, 0, 1}, tortho{0, 1, 1, 0}, tanti{-1, 0, 0, -1};
    ok &= std::abs(dino_similarity(ta, ta, 2, 2) - 1.0) < 1e-12;
    ok &= std::abs(dino_similarity(ta, tortho, 2, 2)) < 1e-12;
    ok &= std::abs(dino_similarity(ta, tanti, 2, 2) + 1.0) < 1e-12;
    report(9, "metrics conformance", ok, "psnr/ssim/dino closed forms");
  });

  guarded(10, "determinism and persistence", [&] {
    bool ok = true;
    std::ostringstream why;

    TrainConfig cfg;
    cfg.frame.box_min = {-8, -8, 0};
    cfg.frame.box_max = {8, 8, 4};
    cfg.sat_size = 8;
    cfg.pano_height = 8;
    cfg.n_samples = 4;
    cfg.decoder_hidden = 8;
    cfg.unet_depth = 1;
    cfg.unet_base_channels = 4;
    cfg.disc_base_channels = 4;
    cfg.seed = 5;
    cfg.validate();
    BoxScene scene = default_box_scene(cfg.frame, 7);
    std::vector<LoadedSample> ds;
    ds.push_back(make_synthetic_sample(scene, cfg, 0, 0, 0).sample);
    ds.push_back(make_synthetic_sample(scene, cfg, 1, -1, 1.2).sample);
    auto pool = illumination_pool(ds);
    auto batch = [&](std::size_t i) {
      return std::vector<const LoadedSample*>{&ds[i % 2]};
    };

    // 10-step loss trajectories, bitwise
    TrainState a = TrainState::init(cfg);
    TrainState b = TrainState::init(cfg);
    for (std::size_t i = 0; i < 10; ++i) {
      LossBreakdown la = train_step(a, batch(i), pool);
      LossBreakdown lb = train_step(b, batch(i), pool);
      if (la != lb) {
        ok = false;
        why << "trajectory diverged at step " << i << "; ";
      }
    }

    // checkpoint resume matches the unbroken run
    fs::path tmp = fs::temp_directory_path() / "s2d_acceptance_ckpt";
    fs::remove_all(tmp);
    TrainState run = TrainState::init(cfg);
    TrainState half = TrainState::init(cfg);
    for (std::size_t i = 0; i < 3; ++i) {
      train_step(run, batch(i), pool);
      train_step(half, batch(i), pool);
    }
    save_checkpoint(tmp, half);
    TrainState resumed = load_checkpoint(tmp);
    for (std::size_t i = 3; i < 6; ++i) {
      train_step(run, batch(i), pool);
      train_step(resumed, batch(i), pool);
    }
    auto pa = run.model.generator_params(), pb = resumed.model.generator_params();
    for (std::size_t i = 0; i < pa.items.size(); ++i)
      if (pa.items[i].second.data() != pb.items[i].second.data()) {
        ok = false;
        why << "resume mismatch in " << pa.items[i].first << "; ";
        break;
      }
    if (run.rng.state() != resumed.rng.state()) {
      ok = false;
      why << "rng state diverged; ";
    }

    // tensor file and png round-trips
    Rng rng(9);
    std::vector<double> vals(12);
    for (auto& v : vals) v = rng.normal();
    write_tensor_file(tmp / "t.ptns", TensorData::from_doubles(vals, {3, 4}));
    ok &= read_tensor_file(tmp / "t.ptns").as_doubles() == vals;
    Image img(3, 4, 5);
    for (std::size_t i = 0; i < img.size(); ++i)
      img.values[i] = double((i * 29) % 256) / 255.0;
    write_png(tmp / "i.png", img);
    ok &= read_png(tmp / "i.png").values == img.values;
    fs::remove_all(tmp);

    report(10, "determinism and persistence", ok,
           ok ? "10-step bitwise, resume, round-trips" : why.str());
  });

  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
