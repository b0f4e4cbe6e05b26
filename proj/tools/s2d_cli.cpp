#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "s2d/metrics.hpp"
#include "s2d/training.hpp"

namespace fs = std::filesystem;
using namespace s2d;

namespace {

std::pair<double, double> parse_position(const std::string& s) {
  double e = 0, n = 0;
  char comma = 0;
  std::istringstream is(s);
  if (!(is >> e >> comma >> n) || comma != ',')
    throw std::invalid_argument("--position expects 'east,north' in meters");
  return {e, n};
}

Image load_sat_image(const std::string& sat_path, const TrainConfig& cfg) {
  fs::path p = sat_path;
  if (p.empty()) {
    // fall back to the first sample of the configured dataset
    if (cfg.dataset_dir.empty())
      throw std::invalid_argument("no --sat given and the config names no dataset");
    auto samples = load_manifest(fs::path(cfg.dataset_dir) / "manifest.csv");
    if (samples.empty()) throw std::runtime_error("configured dataset is empty");
    p = fs::path(cfg.dataset_dir) / samples.front().sat_path;
  }
  Image sat = read_png(p);
  if (sat.channels != 3 || sat.height != cfg.sat_size || sat.width != cfg.sat_size)
    throw std::invalid_argument("satellite image must be 3x" +
                                std::to_string(cfg.sat_size) + "x" +
                                std::to_string(cfg.sat_size));
  return sat;
}

StyleVector resolve_style(const Model& model, const std::string& illum,
                          std::uint64_t seed) {
  if (illum == "null") return null_style();
  if (illum == "random") {
    // random but valid feature: per-channel histogram summing to one
    Rng rng(seed);
    IlluminationFeature f;
    f.values.resize(kIlluminationDim);
    f.provenance = StyleProvenance::random_sampled;
    for (std::size_t c = 0; c < 3; ++c) {
      double total = 0;
      for (std::size_t b = 0; b < kHistogramBins; ++b) {
        double v = rng.uniform();
        f.values[c * kHistogramBins + b] = v;
        total += v;
      }
      for (std::size_t b = 0; b < kHistogramBins; ++b)
        f.values[c * kHistogramBins + b] /= total;
    }
    return model.mapper(f);
  }
  TensorData td = read_tensor_file(illum);
  if (td.count() != kIlluminationDim)
    throw std::invalid_argument("illumination file must hold " +
                                std::to_string(kIlluminationDim) + " values");
  IlluminationFeature f;
  f.values = td.as_doubles();
  f.provenance = StyleProvenance::real;
  return model.mapper(f);
}

TrainState load_state(const std::string& ckpt) {
  return load_checkpoint(fs::path(ckpt));
}

void write_pano(const TrainState& state, const TriPlane& planes,
                const StyleVector& style, double east, double north,
                double heading, const fs::path& out) {
  const TrainConfig& cfg = state.config;
  PanoramaCamera cam = cfg.street_camera(east, north, heading);
  StreetRender render = render_street(
      planes, state.model.decoder, style,
      cfg.sky_branch ? &state.model.sky_gen : nullptr, state.model.sr, cam,
      cfg.frame, cfg.n_samples, default_t_near(), default_t_far(cfg.frame));
  write_png(out, tensor_to_image(render.hi_res));
}

int cmd_train(const std::string& config_path, const std::string& resume) {
  TrainConfig cfg = TrainConfig::load(config_path);
  if (cfg.dataset_dir.empty())
    throw std::invalid_argument("config: dataset_dir is required for training");
  auto dataset = load_dataset(cfg.dataset_dir);
  std::optional<fs::path> resume_from;
  if (!resume.empty()) resume_from = fs::path(resume);
  FitResult result = fit(cfg, dataset, resume_from);
  std::cout << "checkpoint: " << result.checkpoint_dir.string() << "\n";
  if (!result.log.empty()) {
    std::cout << "final losses:";
    for (const auto& [k, v] : result.log.back()) std::cout << " " << k << "=" << v;
    std::cout << "\n";
  }
  return 0;
}

int cmd_render_pano(const std::string& ckpt, const std::string& config_path,
                    const std::string& position, double heading,
                    const std::string& illum, std::uint64_t seed,
                    const std::string& sat_path, const std::string& out) {
  TrainState state = load_state(ckpt);
  TrainConfig cfg = TrainConfig::load(config_path);
  if (cfg.hash() != state.config.hash())
    throw std::invalid_argument("config does not match the checkpoint");
  auto [east, north] = parse_position(position);
  Image sat = load_sat_image(sat_path, state.config);
  TriPlane planes = state.model.triplane_gen.generate(image_to_tensor(sat));
  StyleVector style = resolve_style(state.model, illum, seed);
  write_pano(state, planes, style, east, north, heading, out);
  return 0;
}

int cmd_render_video(const std::string& ckpt, const std::string& trajectory,
                     const std::string& illum, std::uint64_t seed,
                     const std::string& sat_path, const std::string& out_dir) {
  TrainState state = load_state(ckpt);
  Image sat = load_sat_image(sat_path, state.config);
  TriPlane planes = state.model.triplane_gen.generate(image_to_tensor(sat));
  StyleVector style = resolve_style(state.model, illum, seed);
  auto points = load_trajectory(trajectory);
  fs::create_directories(out_dir);
  for (std::size_t i = 0; i < points.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%05zu.png", i);
    write_pano(state, planes, style, points[i].east_m, points[i].north_m,
               points[i].heading_rad, fs::path(out_dir) / name);
  }
  std::cout << points.size() << " frames written to " << out_dir << "\n";
  return 0;
}

int cmd_render_sat(const std::string& ckpt, const std::string& sat_path,
                   const std::string& out) {
  TrainState state = load_state(ckpt);
  Image sat = load_sat_image(sat_path, state.config);
  TriPlane planes = state.model.triplane_gen.generate(image_to_tensor(sat));
  RenderOutput render =
      render_satellite(planes, state.model.decoder, state.config.satellite_camera(),
                       state.config.frame, state.config.n_samples);
  write_png(out, tensor_to_image(render.raw_color));
  return 0;
}

int cmd_extract_illumination(const std::string& pano_path,
                             const std::string& mask_path,
                             const std::string& out) {
  Image pano = read_png(pano_path);
  bool warned = false;
  SkyMask mask = SkyMask::from_image(read_png(mask_path), &warned);
  if (warned)
    std::cerr << "warning: mask was not binary; thresholded at 0.5\n";
  for (auto& v : pano.values) v *= 255.0;
  IlluminationFeature f = extract_illumination(pano, mask);
  write_tensor_file(out, TensorData::from_doubles(f.values, {kIlluminationDim}));
  return 0;
}

int cmd_make_synthetic(const std::string& config_path, const std::string& out_dir,
                       std::size_t views, std::uint64_t scene_seed) {
  TrainConfig cfg = TrainConfig::load(config_path);
  if (views == 0) throw std::invalid_argument("--views must be positive");
  BoxScene scene = default_box_scene(cfg.frame, scene_seed);

  fs::create_directories(out_dir);
  std::ofstream manifest(fs::path(out_dir) / "manifest.csv");
  manifest << "sat,street,mask,east_m,north_m,heading_rad\n";

  double radius = 0.1 * cfg.frame.extent().x;
  bool sat_written = false;
  for (std::size_t i = 0; i < views; ++i) {
    double angle = 2.0 * std::numbers::pi * double(i) / double(views);
    double east = radius * std::cos(angle);
    double north = radius * std::sin(angle);
    double heading = angle;
    SyntheticSample s = make_synthetic_sample(scene, cfg, east, north, heading);
    if (!sat_written) {
      write_png(fs::path(out_dir) / "sat.png", s.sample.sat);
      sat_written = true;
    }
    char street[32], mask[32];
    std::snprintf(street, sizeof(street), "street_%03zu.png", i);
    std::snprintf(mask, sizeof(mask), "mask_%03zu.png", i);
    write_png(fs::path(out_dir) / street, s.sample.street);
    Image mask_img(1, s.sample.mask.height, s.sample.mask.width);
    for (std::size_t p = 0; p < mask_img.values.size(); ++p)
      mask_img.values[p] = s.sample.mask.values[p] ? 1.0 : 0.0;
    write_png(fs::path(out_dir) / mask, mask_img);
    manifest << "sat.png," << street << "," << mask << "," << east << ","
             << north << "," << heading << "\n";
  }
  if (!manifest) throw std::runtime_error("failed writing the dataset manifest");
  std::cout << views << " views written to " << out_dir << "\n";
  return 0;
}

std::string fmt_metric(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  std::ostringstream os;
  os << v;
  return os.str();
}

int cmd_eval(const std::string& ckpt, const std::string& dataset_root,
             const std::string& out, const std::string& tokens_dir,
             const std::string& pred_dir) {
  TrainState state = load_state(ckpt);
  auto entries = load_manifest(fs::path(dataset_root) / "manifest.csv");
  if (entries.empty()) throw std::runtime_error("eval: dataset is empty");

  std::ofstream report(out);
  report << "sample,psnr,ssim,perc,dino\n";
  double sum_psnr = 0, sum_ssim = 0, sum_perc = 0, sum_dino = 0;

  for (const auto& entry : entries) {
    LoadedSample sample = load_sample(entry, dataset_root);
    std::string name = fs::path(entry.street_path).stem().string();

    Image pred;
    if (!pred_dir.empty()) {
      pred = read_png(fs::path(pred_dir) / (name + ".png"));
      if (!pred.same_shape(sample.street))
        throw std::runtime_error("eval: prediction shape mismatch for " + name);
    } else {
      TriPlane planes =
          state.model.triplane_gen.generate(image_to_tensor(sample.sat));
      StyleVector style = state.model.mapper(extract_illumination(
          [&] {
            Image p = sample.street;
            for (auto& v : p.values) v *= 255.0;
            return p;
          }(),
          sample.mask));
      PanoramaCamera cam = state.config.street_camera(
          sample.east_m, sample.north_m, sample.heading_rad);
      StreetRender render = render_street(
          planes, state.model.decoder, style,
          state.config.sky_branch ? &state.model.sky_gen : nullptr,
          state.model.sr, cam, state.config.frame, state.config.n_samples,
          default_t_near(), default_t_far(state.config.frame));
      pred = tensor_to_image(render.hi_res);
    }

    double p = psnr(pred, sample.street);
    double s = ssim(pred, sample.street);
    double perc = state.model.perceptual
                      .distance(image_to_tensor(pred), image_to_tensor(sample.street))
                      .item();
    double dino = std::numeric_limits<double>::quiet_NaN();
    if (!tokens_dir.empty()) {
      fs::path ta = fs::path(tokens_dir) / (name + "_real.ptns");
      fs::path tb = fs::path(tokens_dir) / (name + "_fake.ptns");
      if (fs::exists(ta) && fs::exists(tb)) {
        TensorData da = read_tensor_file(ta), db = read_tensor_file(tb);
        if (da.dims.size() != 2 || db.dims.size() != 2)
          throw std::runtime_error("eval: token files must be rank-2 for " + name);
        dino = dino_similarity(da.as_doubles(), db.as_doubles(), da.dims[0],
                               da.dims[1]);
      }
    }

    report << name << "," << fmt_metric(p) << "," << fmt_metric(s) << ","
           << fmt_metric(perc) << "," << fmt_metric(dino) << "\n";
    sum_psnr += p;
    sum_ssim += s;
    sum_perc += perc;
    sum_dino += dino;
  }
  double n = double(entries.size());
  report << "mean," << fmt_metric(sum_psnr / n) << "," << fmt_metric(sum_ssim / n)
         << "," << fmt_metric(sum_perc / n) << "," << fmt_metric(sum_dino / n)
         << "\n";
  if (!report) throw std::runtime_error("failed writing " + out);
  std::cout << "report written to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"satellite-to-street panorama synthesis engine"};
  app.require_subcommand(1);
  int rc = 0;

  // train
  std::string train_config, train_resume;
  auto* train = app.add_subcommand("train", "fit a model from a JSON config");
  train->add_option("config", train_config, "config file")->required();
  train->add_option("--resume", train_resume, "checkpoint directory to resume from");
  train->callback([&] { rc = cmd_train(train_config, train_resume); });

  // render-pano
  std::string rp_ckpt, rp_config, rp_position = "0,0", rp_illum = "null",
              rp_sat, rp_out = "pano.png";
  double rp_heading = 0.0;
  std::uint64_t rp_seed = 0;
  auto* rp = app.add_subcommand("render-pano", "render one street panorama");
  rp->add_option("ckpt", rp_ckpt, "checkpoint directory")->required();
  rp->add_option("config", rp_config, "config file (must match the checkpoint)")
      ->required();
  rp->add_option("--position", rp_position, "east,north offset in meters");
  rp->add_option("--heading", rp_heading, "heading in radians");
  rp->add_option("--illum", rp_illum, "illumination: file path, 'random' or 'null'");
  rp->add_option("--seed", rp_seed, "seed for --illum random");
  rp->add_option("--sat", rp_sat, "satellite PNG (default: first dataset sample)");
  rp->add_option("-o,--output", rp_out, "output PNG");
  rp->callback([&] {
    rc = cmd_render_pano(rp_ckpt, rp_config, rp_position, rp_heading, rp_illum,
                         rp_seed, rp_sat, rp_out);
  });

  // render-video
  std::string rv_ckpt, rv_traj, rv_illum = "null", rv_sat, rv_out = "frames";
  std::uint64_t rv_seed = 0;
  auto* rv = app.add_subcommand("render-video", "render frames along a trajectory");
  rv->add_option("ckpt", rv_ckpt, "checkpoint directory")->required();
  rv->add_option("trajectory", rv_traj, "trajectory CSV")->required();
  rv->add_option("--illum", rv_illum, "illumination: file path, 'random' or 'null'");
  rv->add_option("--seed", rv_seed, "seed for --illum random");
  rv->add_option("--sat", rv_sat, "satellite PNG (default: first dataset sample)");
  rv->add_option("-o,--output", rv_out, "output frame directory");
  rv->callback([&] {
    rc = cmd_render_video(rv_ckpt, rv_traj, rv_illum, rv_seed, rv_sat, rv_out);
  });

  // render-sat
  std::string rs_ckpt, rs_sat, rs_out = "sat_render.png";
  auto* rs = app.add_subcommand("render-sat", "render the nadir satellite view");
  rs->add_option("ckpt", rs_ckpt, "checkpoint directory")->required();
  rs->add_option("--sat", rs_sat, "satellite PNG (default: first dataset sample)");
  rs->add_option("-o,--output", rs_out, "output PNG");
  rs->callback([&] { rc = cmd_render_sat(rs_ckpt, rs_sat, rs_out); });

  // extract-illumination
  std::string ei_pano, ei_mask, ei_out = "illumination.ptns";
  auto* ei = app.add_subcommand("extract-illumination",
                                "sky histogram feature from a panorama + mask");
  ei->add_option("pano", ei_pano, "panorama PNG")->required();
  ei->add_option("mask", ei_mask, "sky mask PNG")->required();
  ei->add_option("-o,--output", ei_out, "output tensor file");
  ei->callback([&] { rc = cmd_extract_illumination(ei_pano, ei_mask, ei_out); });

  // make-synthetic
  std::string ms_config, ms_out = "dataset";
  std::size_t ms_views = 4;
  std::uint64_t ms_seed = 7;
  auto* ms = app.add_subcommand("make-synthetic",
                                "generate a procedural paired dataset");
  ms->add_option("config", ms_config, "config file (sizes and world frame)")
      ->required();
  ms->add_option("-o,--output", ms_out, "output dataset directory");
  ms->add_option("--views", ms_views, "number of street views");
  ms->add_option("--scene-seed", ms_seed, "procedural scene seed");
  ms->callback([&] { rc = cmd_make_synthetic(ms_config, ms_out, ms_views, ms_seed); });

  // eval
  std::string ev_ckpt, ev_dataset, ev_out = "report.csv", ev_tokens, ev_pred;
  auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
  ev->add_option("ckpt", ev_ckpt, "checkpoint directory")->required();
  ev->add_option("dataset", ev_dataset, "dataset root")->required();
  ev->add_option("-o,--output", ev_out, "report CSV");
  ev->add_option("--tokens", ev_tokens,
                 "directory of <sample>_real.ptns/<sample>_fake.ptns token files");
  ev->add_option("--pred", ev_pred,
                 "directory of precomputed <sample>.png predictions");
  ev->callback(
      [&] { rc = cmd_eval(ev_ckpt, ev_dataset, ev_out, ev_tokens, ev_pred); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return rc;
}
