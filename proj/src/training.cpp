#include "s2d/training.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace s2d {

namespace fs = std::filesystem;
using nlohmann::json;

// ---- TrainConfig ----

void TrainConfig::validate() const {
  frame.validate();
  weights.validate();
  if (batch_size == 0) throw std::invalid_argument("config: batch_size must be positive");
  if (lr_generator <= 0 || lr_discriminator <= 0)
    throw std::invalid_argument("config: learning rates must be positive");
  if (r1_gamma < 0) throw std::invalid_argument("config: r1_gamma must be non-negative");
  if (pano_height == 0 || pano_height % 8 != 0)
    throw std::invalid_argument("config: pano_height must be a positive multiple of 8");
  if (sat_size == 0 || sat_size % 4 != 0)
    throw std::invalid_argument("config: sat_size must be a positive multiple of 4");
  if (sat_size % (std::size_t(1) << unet_depth) != 0)
    throw std::invalid_argument("config: sat_size must be divisible by 2^unet_depth");
  if ((sat_size / 4) < 2)
    throw std::invalid_argument("config: sat_size too small for quarter-resolution crops");
  if (n_samples < 2) throw std::invalid_argument("config: n_samples must be >= 2");
  if (decoder_hidden == 0 || unet_base_channels == 0 || disc_base_channels == 0)
    throw std::invalid_argument("config: channel counts must be positive");
  if (gsd < 0) throw std::invalid_argument("config: gsd must be non-negative");
  if (gsd > 0 && gsd * double(sat_size) > frame.extent().x + 1e-9)
    throw std::invalid_argument("config: satellite footprint exceeds the scene box");
}

double TrainConfig::effective_gsd() const {
  if (gsd > 0) return gsd;
  return frame.extent().x / double(sat_size);
}

SatelliteOrthoCamera TrainConfig::satellite_camera() const {
  SatelliteOrthoCamera cam;
  cam.ground_sample_distance = effective_gsd();
  cam.width = sat_size;
  cam.height = sat_size;
  cam.altitude = frame.box_max.z + 1.0;
  return cam;
}

PanoramaCamera TrainConfig::street_camera(double east, double north,
                                          double heading) const {
  PanoramaCamera cam;
  Vec3 c = frame.center();
  cam.position = {c.x + east, c.y + north, frame.box_min.z + frame.camera_height};
  cam.heading_offset = heading;
  cam.height = pano_height;
  cam.width = 4 * pano_height;
  return cam;
}

static std::string variant_name(DecoderVariant v) {
  return v == DecoderVariant::adaptive ? "adaptive" : "vanilla";
}
static DecoderVariant variant_from(const std::string& s) {
  if (s == "adaptive") return DecoderVariant::adaptive;
  if (s == "vanilla") return DecoderVariant::vanilla;
  throw std::invalid_argument("config: unknown decoder variant '" + s + "'");
}
static std::string policy_name(IlluminationPolicy p) {
  switch (p) {
    case IlluminationPolicy::real: return "real";
    case IlluminationPolicy::random: return "random";
    default: return "null";
  }
}
static IlluminationPolicy policy_from(const std::string& s) {
  if (s == "real") return IlluminationPolicy::real;
  if (s == "random") return IlluminationPolicy::random;
  if (s == "null") return IlluminationPolicy::null;
  throw std::invalid_argument("config: unknown illumination policy '" + s + "'");
}

std::string TrainConfig::to_json() const {
  json j;
  j["iterations"] = iterations;
  j["batch_size"] = batch_size;
  j["lr_generator"] = lr_generator;
  j["lr_discriminator"] = lr_discriminator;
  j["seed"] = seed;
  j["r1_gamma"] = r1_gamma;
  j["decoder_variant"] = variant_name(decoder_variant);
  j["sky_branch"] = sky_branch;
  j["use_opacity_loss"] = use_opacity_loss;
  j["use_sky_loss"] = use_sky_loss;
  j["use_sat_loss"] = use_sat_loss;
  j["use_gan"] = use_gan;
  j["illumination_policy"] = policy_name(illumination_policy);
  j["weights"] = {{"d_str", weights.d_str}, {"d_sat", weights.d_sat},
                  {"sat", weights.sat},     {"str", weights.str},
                  {"sky", weights.sky},     {"opa", weights.opa}};
  j["sat_size"] = sat_size;
  j["pano_height"] = pano_height;
  j["n_samples"] = n_samples;
  j["decoder_hidden"] = decoder_hidden;
  j["unet_depth"] = unet_depth;
  j["unet_base_channels"] = unet_base_channels;
  j["disc_base_channels"] = disc_base_channels;
  j["perceptual_seed"] = perceptual_seed;
  j["frame"] = {{"box_min", {frame.box_min.x, frame.box_min.y, frame.box_min.z}},
                {"box_max", {frame.box_max.x, frame.box_max.y, frame.box_max.z}},
                {"camera_height", frame.camera_height}};
  j["gsd"] = gsd;
  j["dataset_dir"] = dataset_dir;
  j["out_dir"] = out_dir;
  j["checkpoint_every"] = checkpoint_every;
  j["log_every"] = log_every;
  return j.dump(2);
}

TrainConfig TrainConfig::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const std::exception& e) {
    throw std::invalid_argument(std::string("config: invalid JSON: ") + e.what());
  }
  TrainConfig c;
  auto get = [&](const char* key, auto& field) {
    if (j.contains(key)) field = j.at(key).template get<std::decay_t<decltype(field)>>();
  };
  get("iterations", c.iterations);
  get("batch_size", c.batch_size);
  get("lr_generator", c.lr_generator);
  get("lr_discriminator", c.lr_discriminator);
  get("seed", c.seed);
  get("r1_gamma", c.r1_gamma);
  if (j.contains("decoder_variant"))
    c.decoder_variant = variant_from(j.at("decoder_variant").get<std::string>());
  get("sky_branch", c.sky_branch);
  get("use_opacity_loss", c.use_opacity_loss);
  get("use_sky_loss", c.use_sky_loss);
  get("use_sat_loss", c.use_sat_loss);
  get("use_gan", c.use_gan);
  if (j.contains("illumination_policy"))
    c.illumination_policy = policy_from(j.at("illumination_policy").get<std::string>());
  if (j.contains("weights")) {
    const auto& w = j.at("weights");
    auto getw = [&](const char* key, double& field) {
      if (w.contains(key)) field = w.at(key).get<double>();
    };
    getw("d_str", c.weights.d_str);
    getw("d_sat", c.weights.d_sat);
    getw("sat", c.weights.sat);
    getw("str", c.weights.str);
    getw("sky", c.weights.sky);
    getw("opa", c.weights.opa);
  }
  get("sat_size", c.sat_size);
  get("pano_height", c.pano_height);
  get("n_samples", c.n_samples);
  get("decoder_hidden", c.decoder_hidden);
  get("unet_depth", c.unet_depth);
  get("unet_base_channels", c.unet_base_channels);
  get("disc_base_channels", c.disc_base_channels);
  get("perceptual_seed", c.perceptual_seed);
  if (j.contains("frame")) {
    const auto& f = j.at("frame");
    auto vec3 = [](const json& a) {
      return Vec3{a.at(0).get<double>(), a.at(1).get<double>(), a.at(2).get<double>()};
    };
    if (f.contains("box_min")) c.frame.box_min = vec3(f.at("box_min"));
    if (f.contains("box_max")) c.frame.box_max = vec3(f.at("box_max"));
    if (f.contains("camera_height"))
      c.frame.camera_height = f.at("camera_height").get<double>();
  }
  get("gsd", c.gsd);
  get("dataset_dir", c.dataset_dir);
  get("out_dir", c.out_dir);
  get("checkpoint_every", c.checkpoint_every);
  get("log_every", c.log_every);
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const fs::path& file) {
  std::ifstream in(file);
  if (!in) throw std::runtime_error("config: cannot open " + file.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

std::string TrainConfig::hash() const {
  // FNV-1a over the canonical JSON form
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : to_json()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  std::ostringstream os;
  os << std::hex << h;
  return os.str();
}

// ---- Model ----

Model::Model(const TrainConfig& cfg, Rng& rng)
    : triplane_gen({cfg.sat_size, 32, cfg.unet_depth, cfg.unet_base_channels}, rng),
      mapper(rng),
      decoder(cfg.decoder_variant, 96, cfg.decoder_hidden, rng),
      sky_gen({cfg.pano_height, 4 * cfg.pano_height, kAppearanceDim}, rng),
      sr(kAppearanceDim, rng),
      d_street(6, cfg.disc_base_channels, rng),
      d_sat(3, cfg.disc_base_channels, rng),
      perceptual(3, cfg.perceptual_seed) {}

ParamMap Model::generator_params() const {
  ParamMap m;
  triplane_gen.collect(m, "triplane");
  mapper.collect(m, "mapper");
  decoder.collect(m, "decoder");
  sky_gen.collect(m, "sky");
  sr.collect(m, "sr");
  return m;
}

ParamMap Model::discriminator_params() const {
  ParamMap m;
  d_street.collect(m, "d_street");
  d_sat.collect(m, "d_sat");
  return m;
}

TrainState TrainState::init(const TrainConfig& cfg) {
  cfg.validate();
  TrainState s;
  s.config = cfg;
  Rng init_rng(cfg.seed);
  s.model = Model(cfg, init_rng);
  s.opt_g = Adam(s.model.generator_params().tensors(), cfg.lr_generator);
  s.opt_d = Adam(s.model.discriminator_params().tensors(), cfg.lr_discriminator);
  s.rng = init_rng;
  return s;
}

// ---- helpers ----

static Image scaled_255(const Image& img) {
  Image out = img;
  for (auto& v : out.values) v *= 255.0;
  return out;
}

std::vector<IlluminationFeature> illumination_pool(
    const std::vector<LoadedSample>& dataset) {
  std::vector<IlluminationFeature> pool;
  pool.reserve(dataset.size());
  for (const auto& s : dataset)
    pool.push_back(extract_illumination(scaled_255(s.street), s.mask));
  return pool;
}

StyleVector style_for_sample(const Model& model, const LoadedSample& sample,
                             IlluminationPolicy policy,
                             const std::vector<IlluminationFeature>& pool,
                             Rng& rng) {
  switch (policy) {
    case IlluminationPolicy::real:
      return model.mapper(extract_illumination(scaled_255(sample.street), sample.mask));
    case IlluminationPolicy::random:
      return model.mapper(sample_training_illumination(pool, rng));
    default:
      return null_style();
  }
}

SkyMask downsample_mask2(const SkyMask& mask) {
  if (mask.width % 2 != 0 || mask.height % 2 != 0)
    throw std::invalid_argument("mask dimensions must be even to downsample");
  SkyMask out;
  out.width = mask.width / 2;
  out.height = mask.height / 2;
  out.values.resize(out.width * out.height);
  for (std::size_t r = 0; r < out.height; ++r)
    for (std::size_t c = 0; c < out.width; ++c)
      out.values[r * out.width + c] = mask.values[2 * r * mask.width + 2 * c];
  return out;
}

StreetRender render_street_for_sample(const TrainState& state,
                                      const TriPlane& planes,
                                      const LoadedSample& sample,
                                      const StyleVector& style) {
  const TrainConfig& cfg = state.config;
  PanoramaCamera cam =
      cfg.street_camera(sample.east_m, sample.north_m, sample.heading_rad);
  return render_street(planes, state.model.decoder, style,
                       cfg.sky_branch ? &state.model.sky_gen : nullptr,
                       state.model.sr, cam, cfg.frame, cfg.n_samples,
                       default_t_near(), default_t_far(cfg.frame));
}

static void check_sample_sizes(const TrainConfig& cfg, const LoadedSample& s) {
  if (s.sat.channels != 3 || s.sat.height != cfg.sat_size || s.sat.width != cfg.sat_size)
    throw std::invalid_argument("sample: satellite image does not match configured size");
  std::size_t h = 2 * cfg.pano_height, w = 8 * cfg.pano_height;
  if (s.street.channels != 3 || s.street.height != h || s.street.width != w)
    throw std::invalid_argument(
        "sample: street image must be the super-resolved render size");
}

SyntheticSample make_synthetic_sample(const BoxScene& scene,
                                      const TrainConfig& cfg, double east,
                                      double north, double heading) {
  SyntheticSample out;
  out.sample.sat = rasterize_satellite(scene, cfg.satellite_camera()).image;
  PanoramaCamera cam = cfg.street_camera(east, north, heading);
  cam.height = 2 * cfg.pano_height;
  cam.width = 8 * cfg.pano_height;
  PanoramaTrace trace = raytrace_panorama(scene, cam);
  out.sample.street = trace.image;
  out.sample.mask = trace.mask;
  out.sample.east_m = east;
  out.sample.north_m = north;
  out.sample.heading_rad = heading;
  out.depth = trace.depth;
  return out;
}

// ---- train step ----

LossBreakdown train_step(TrainState& state,
                         const std::vector<const LoadedSample*>& batch,
                         const std::vector<IlluminationFeature>& pool) {
  if (batch.empty()) throw std::invalid_argument("train_step: empty batch");
  const TrainConfig& cfg = state.config;
  Model& model = state.model;
  const double inv_n = 1.0 / double(batch.size());

  auto acc = [](Tensor& a, const Tensor& t) { a = a.defined() ? a + t : t; };

  LossParts parts;
  Tensor d_sum;
  double d_str_val = 0, d_sat_val = 0, r1_val = 0;

  for (const LoadedSample* sample : batch) {
    check_sample_sizes(cfg, *sample);
    Tensor sat_in = image_to_tensor(sample->sat);
    TriPlane planes = model.triplane_gen.generate(sat_in);
    StyleVector style = style_for_sample(model, *sample, cfg.illumination_policy,
                                         pool, state.rng);
    StreetRender street = render_street_for_sample(state, planes, *sample, style);

    Tensor gt_hi = image_to_tensor(sample->street);
    Tensor gt_raw = avgpool2(gt_hi);
    SkyMask mask_raw = downsample_mask2(sample->mask);

    acc(parts.str, reconstruction_loss(street.hi_res, gt_hi, model.perceptual));
    if (cfg.use_opacity_loss)
      acc(parts.opa, opacity_loss(street.ground.opacity, mask_raw));
    if (cfg.sky_branch && cfg.use_sky_loss)
      acc(parts.sky, sky_loss(slice0(street.sky_feature, 0, 3), gt_raw, mask_raw));

    Tensor sat_fake, sat_real;
    if (cfg.use_sat_loss || cfg.use_gan) {
      // quarter-resolution nadir view, random half-window crop
      std::size_t q = cfg.sat_size / 4, cw = q / 2;
      SatelliteOrthoCamera qcam = cfg.satellite_camera();
      qcam.width = qcam.height = q;
      qcam.ground_sample_distance = cfg.effective_gsd() * 4.0;
      std::size_t r0 = state.rng.next_u64() % (q - cw + 1);
      std::size_t c0 = state.rng.next_u64() % (q - cw + 1);
      CropRegion region{r0, c0, cw, cw};
      RenderOutput sat_render = render_satellite(planes, model.decoder, qcam,
                                                 cfg.frame, cfg.n_samples, region);
      sat_fake = sat_render.raw_color;
      sat_real = crop(avgpool2(avgpool2(sat_in)), r0, c0, cw, cw);
      if (cfg.use_sat_loss)
        acc(parts.sat, reconstruction_loss(sat_fake, sat_real, model.perceptual));
    }

    if (cfg.use_gan) {
      // dual discrimination: final image alongside the upsampled raw blend
      Tensor fake6 = concat0({street.hi_res, upsample2x(street.raw_blend)});
      Tensor real6 = concat0({gt_hi, upsample2x(gt_raw)});
      GanLosses gs = gan_losses(model.d_street, real6, fake6, cfg.r1_gamma);
      GanLosses ga = gan_losses(model.d_sat, sat_real, sat_fake, cfg.r1_gamma);
      acc(parts.g_str, gs.g_loss);
      acc(parts.g_sat, ga.g_loss);
      acc(d_sum, gs.d_loss + gs.r1_penalty + ga.d_loss + ga.r1_penalty);
      d_str_val += gs.d_loss.item() * inv_n;
      d_sat_val += ga.d_loss.item() * inv_n;
      r1_val += (gs.r1_penalty.item() + ga.r1_penalty.item()) * inv_n;
    }
  }

  auto avg = [&](Tensor& t) {
    if (t.defined()) t = t * inv_n;
  };
  avg(parts.sat);
  avg(parts.str);
  avg(parts.sky);
  avg(parts.opa);
  avg(parts.g_str);
  avg(parts.g_sat);

  TotalLoss tl = total_loss(parts, cfg.weights);

  auto gen_params = model.generator_params().tensors();
  auto gen_grads = grad(tl.total, gen_params);
  state.opt_g.step(gen_grads);

  LossBreakdown breakdown(tl.breakdown.begin(), tl.breakdown.end());

  if (cfg.use_gan) {
    Tensor d_avg = d_sum * inv_n;
    if (!std::isfinite(d_avg.item()))
      throw std::runtime_error("train_step: discriminator loss is not finite");
    auto d_params = model.discriminator_params().tensors();
    auto d_grads = grad(d_avg, d_params);
    state.opt_d.step(d_grads);
    breakdown["d_street"] = d_str_val;
    breakdown["d_sat"] = d_sat_val;
    breakdown["d_r1"] = r1_val;
  }

  ++state.iteration;
  return breakdown;
}

// ---- checkpoints ----

static void write_param(const fs::path& file, const Tensor& t) {
  write_tensor_file(file, TensorData::from_doubles(t.data(), t.shape()));
}

static void write_moments(const fs::path& dir, const ParamMap& pm,
                          const Adam& opt) {
  fs::create_directories(dir);
  for (std::size_t i = 0; i < pm.items.size(); ++i) {
    const auto& [name, t] = pm.items[i];
    write_tensor_file(dir / (name + ".m.ptns"),
                      TensorData::from_doubles(opt.m[i], {opt.m[i].size()}));
    write_tensor_file(dir / (name + ".v.ptns"),
                      TensorData::from_doubles(opt.v[i], {opt.v[i].size()}));
  }
}

void save_checkpoint(const fs::path& dir, const TrainState& state) {
  fs::path tmp = dir;
  tmp += ".tmp";
  fs::remove_all(tmp);
  fs::create_directories(tmp / "params");

  ParamMap gp = state.model.generator_params();
  ParamMap dp = state.model.discriminator_params();
  json names_g = json::array(), names_d = json::array();
  for (const auto& [name, t] : gp.items) {
    write_param(tmp / "params" / (name + ".ptns"), t);
    names_g.push_back(name);
  }
  for (const auto& [name, t] : dp.items) {
    write_param(tmp / "params" / (name + ".ptns"), t);
    names_d.push_back(name);
  }
  write_moments(tmp / "opt_g", gp, state.opt_g);
  write_moments(tmp / "opt_d", dp, state.opt_d);

  json manifest;
  manifest["format_version"] = 1;
  manifest["iteration"] = state.iteration;
  manifest["config"] = json::parse(state.config.to_json());
  manifest["config_hash"] = state.config.hash();
  manifest["rng_state"] = state.rng.state();
  manifest["opt_g_steps"] = state.opt_g.step_count;
  manifest["opt_d_steps"] = state.opt_d.step_count;
  manifest["generator"] = names_g;
  manifest["discriminator"] = names_d;
  {
    std::ofstream out(tmp / "manifest.json");
    out << manifest.dump(2) << "\n";
    if (!out) throw std::runtime_error("checkpoint: write failed in " + tmp.string());
  }

  fs::remove_all(dir);
  fs::rename(tmp, dir);
}

static void read_param_into(const fs::path& file, Tensor& t) {
  TensorData td = read_tensor_file(file);
  if (td.count() != t.size())
    throw std::runtime_error("checkpoint: size mismatch for " + file.string());
  t.data() = td.as_doubles();
}

static void read_moments(const fs::path& dir, const ParamMap& pm, Adam& opt) {
  for (std::size_t i = 0; i < pm.items.size(); ++i) {
    const auto& name = pm.items[i].first;
    opt.m[i] = read_tensor_file(dir / (name + ".m.ptns")).as_doubles();
    opt.v[i] = read_tensor_file(dir / (name + ".v.ptns")).as_doubles();
    if (opt.m[i].size() != pm.items[i].second.size() ||
        opt.v[i].size() != pm.items[i].second.size())
      throw std::runtime_error("checkpoint: optimizer state size mismatch for " + name);
  }
}

TrainState load_checkpoint(const fs::path& dir) {
  std::ifstream in(dir / "manifest.json");
  if (!in) throw std::runtime_error("checkpoint: cannot open " + (dir / "manifest.json").string());
  json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("checkpoint: invalid manifest: ") + e.what());
  }

  TrainConfig cfg = TrainConfig::from_json(manifest.at("config").dump());
  if (manifest.at("config_hash").get<std::string>() != cfg.hash())
    throw std::runtime_error("checkpoint: config hash mismatch");

  TrainState state = TrainState::init(cfg);
  ParamMap gp = state.model.generator_params();
  ParamMap dp = state.model.discriminator_params();

  auto expect_names = [&](const json& names, const ParamMap& pm, const char* which) {
    if (names.size() != pm.items.size())
      throw std::runtime_error(std::string("checkpoint: ") + which +
                               " parameter list does not match the model");
    for (std::size_t i = 0; i < pm.items.size(); ++i)
      if (names.at(i).get<std::string>() != pm.items[i].first)
        throw std::runtime_error(std::string("checkpoint: ") + which +
                                 " parameter order mismatch at " + pm.items[i].first);
  };
  expect_names(manifest.at("generator"), gp, "generator");
  expect_names(manifest.at("discriminator"), dp, "discriminator");

  for (auto& [name, t] : gp.items) read_param_into(dir / "params" / (name + ".ptns"), t);
  for (auto& [name, t] : dp.items) read_param_into(dir / "params" / (name + ".ptns"), t);
  read_moments(dir / "opt_g", gp, state.opt_g);
  read_moments(dir / "opt_d", dp, state.opt_d);
  state.opt_g.step_count = manifest.at("opt_g_steps").get<std::size_t>();
  state.opt_d.step_count = manifest.at("opt_d_steps").get<std::size_t>();
  state.rng.set_state(manifest.at("rng_state").get<std::string>());
  state.iteration = manifest.at("iteration").get<std::size_t>();
  return state;
}

// ---- fit ----

FitResult fit(const TrainConfig& cfg, const std::vector<LoadedSample>& dataset,
              const std::optional<fs::path>& resume_from) {
  cfg.validate();
  if (dataset.empty()) throw std::invalid_argument("fit: empty dataset");

  TrainState state = resume_from ? load_checkpoint(*resume_from)
                                 : TrainState::init(cfg);
  auto pool = illumination_pool(dataset);

  fs::path out = cfg.out_dir.empty() ? fs::path(".") : fs::path(cfg.out_dir);
  fs::create_directories(out);
  fs::path log_path = out / "train_log.csv";
  bool fresh_log = !fs::exists(log_path) || fs::file_size(log_path) == 0;
  std::ofstream log_csv(log_path, std::ios::app);

  FitResult result;
  result.checkpoint_dir = out / "checkpoint";

  bool header_written = !fresh_log;
  while (state.iteration < cfg.iterations) {
    std::vector<const LoadedSample*> batch;
    batch.reserve(cfg.batch_size);
    for (std::size_t b = 0; b < cfg.batch_size; ++b)
      batch.push_back(&dataset[state.rng.next_u64() % dataset.size()]);

    LossBreakdown bd = train_step(state, batch, pool);
    result.log.push_back(bd);

    if (!header_written) {
      log_csv << "iteration";
      for (const auto& [k, v] : bd) log_csv << "," << k;
      log_csv << "\n";
      header_written = true;
    }
    if (cfg.log_every && (state.iteration % cfg.log_every == 0 ||
                          state.iteration == cfg.iterations)) {
      log_csv << state.iteration;
      for (const auto& [k, v] : bd) log_csv << "," << v;
      log_csv << "\n";
      log_csv.flush();
    }
    if (cfg.checkpoint_every && state.iteration % cfg.checkpoint_every == 0 &&
        state.iteration < cfg.iterations)
      save_checkpoint(result.checkpoint_dir, state);
  }

  save_checkpoint(result.checkpoint_dir, state);
  return result;
}

}  // namespace s2d
