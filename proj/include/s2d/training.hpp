#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "s2d/io.hpp"
#include "s2d/losses.hpp"
#include "s2d/renderer.hpp"
#include "s2d/synthetic.hpp"

namespace s2d {

enum class IlluminationPolicy { real, random, null };

struct TrainConfig {
  // schedule
  std::size_t iterations = 500;
  std::size_t batch_size = 1;
  double lr_generator = 2e-3;
  double lr_discriminator = 2e-3;
  std::uint64_t seed = 1;
  double r1_gamma = 1.0;

  // ablation switches
  DecoderVariant decoder_variant = DecoderVariant::adaptive;
  bool sky_branch = true;
  bool use_opacity_loss = true;
  bool use_sky_loss = true;
  bool use_sat_loss = true;
  bool use_gan = true;
  IlluminationPolicy illumination_policy = IlluminationPolicy::real;
  LossWeights weights;

  // model dimensions (desk-scale defaults; scale via config)
  std::size_t sat_size = 32;     // satellite side length = plane resolution
  std::size_t pano_height = 16;  // render H; width 4H; SR output 2H x 8H
  std::size_t n_samples = 24;
  std::size_t decoder_hidden = 64;
  std::size_t unet_depth = 2;
  std::size_t unet_base_channels = 12;
  std::size_t disc_base_channels = 8;
  std::uint64_t perceptual_seed = 1234;

  // world geometry
  WorldFrame frame;
  double gsd = 0.0;  // 0 = derive so the satellite footprint spans the box

  // bookkeeping
  std::string dataset_dir;
  std::string out_dir;
  std::size_t checkpoint_every = 0;  // 0 = final checkpoint only
  std::size_t log_every = 1;

  void validate() const;
  double effective_gsd() const;
  SatelliteOrthoCamera satellite_camera() const;
  PanoramaCamera street_camera(double east, double north, double heading) const;

  std::string to_json() const;
  static TrainConfig from_json(const std::string& text);
  static TrainConfig load(const std::filesystem::path& file);
  std::string hash() const;
};

struct Model {
  TriPlaneGenerator triplane_gen;
  IlluminationMapper mapper;
  FieldDecoder decoder;
  SkyGenerator sky_gen;
  SuperResolver sr;
  Discriminator d_street;  // 6-channel dual-discrimination input
  Discriminator d_sat;     // 3-channel satellite renders
  PerceptualDistance perceptual;

  Model() = default;
  Model(const TrainConfig& cfg, Rng& rng);
  ParamMap generator_params() const;
  ParamMap discriminator_params() const;
};

struct TrainState {
  TrainConfig config;
  Model model;
  Adam opt_g, opt_d;
  Rng rng;
  std::size_t iteration = 0;

  static TrainState init(const TrainConfig& cfg);
};

using LossBreakdown = std::map<std::string, double>;

// One alternating generator/discriminator update over a batch.
LossBreakdown train_step(TrainState& state,
                         const std::vector<const LoadedSample*>& batch,
                         const std::vector<IlluminationFeature>& pool);

// Checkpoints: a directory of .ptns parameter/optimizer tensors plus a
// JSON manifest; written atomically (temp dir + rename).
void save_checkpoint(const std::filesystem::path& dir, const TrainState& state);
TrainState load_checkpoint(const std::filesystem::path& dir);

struct FitResult {
  std::filesystem::path checkpoint_dir;
  std::vector<LossBreakdown> log;
};

FitResult fit(const TrainConfig& cfg, const std::vector<LoadedSample>& dataset,
              const std::optional<std::filesystem::path>& resume_from = {});

// Helpers shared with the CLI and tests.
std::vector<IlluminationFeature> illumination_pool(
    const std::vector<LoadedSample>& dataset);
StyleVector style_for_sample(const Model& model, const LoadedSample& sample,
                             IlluminationPolicy policy,
                             const std::vector<IlluminationFeature>& pool,
                             Rng& rng);
SkyMask downsample_mask2(const SkyMask& mask);
StreetRender render_street_for_sample(const TrainState& state,
                                      const TriPlane& planes,
                                      const LoadedSample& sample,
                                      const StyleVector& style);

// Renders one closed-form training pair at the sizes the config expects;
// the ground-truth street view is traced at the super-resolved size.
struct SyntheticSample {
  LoadedSample sample;
  std::vector<double> depth;  // ground-truth street depth, +inf on sky
};
SyntheticSample make_synthetic_sample(const BoxScene& scene,
                                      const TrainConfig& cfg, double east,
                                      double north, double heading);

}  // namespace s2d
