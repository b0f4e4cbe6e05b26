#include "s2d/illumination.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace s2d {

std::size_t SkyMask::sky_count() const {
  std::size_t n = 0;
  for (auto v : values) n += v;
  return n;
}

SkyMask SkyMask::from_image(const Image& gray, bool* warned) {
  if (gray.channels != 1)
    throw std::invalid_argument("sky mask must be single-channel");
  SkyMask m;
  m.width = gray.width;
  m.height = gray.height;
  m.values.resize(gray.values.size());
  bool w = false;
  for (std::size_t i = 0; i < gray.values.size(); ++i) {
    double v = gray.values[i];
    if (v != 0.0 && v != 1.0) w = true;
    m.values[i] = v >= 0.5 ? 1 : 0;
  }
  if (warned) *warned = w;
  return m;
}

bool IlluminationFeature::is_zero() const {
  for (double v : values)
    if (v != 0.0) return false;
  return true;
}

Tensor IlluminationFeature::tensor() const {
  return from_vector(values, {kIlluminationDim});
}

IlluminationFeature extract_illumination(const Image& pano, const SkyMask& mask) {
  if (pano.channels != 3)
    throw std::invalid_argument("extract_illumination: need a 3-channel panorama");
  if (pano.width != mask.width || pano.height != mask.height)
    throw std::invalid_argument("extract_illumination: image/mask size mismatch");

  IlluminationFeature f;
  f.values.assign(kIlluminationDim, 0.0);
  std::size_t n_sky = mask.sky_count();
  if (n_sky == 0) return f;

  for (std::size_t c = 0; c < 3; ++c) {
    double* block = f.values.data() + c * kHistogramBins;
    for (std::size_t i = 0; i < mask.values.size(); ++i) {
      if (!mask.values[i]) continue;
      double v = pano.values[c * mask.values.size() + i];
      if (v < 0.0 || v > 255.0)
        throw std::invalid_argument("extract_illumination: intensity outside [0,255]");
      std::size_t bin = std::min<std::size_t>(
          kHistogramBins - 1, std::size_t(v * double(kHistogramBins) / 256.0));
      block[bin] += 1.0;
    }
    for (std::size_t b = 0; b < kHistogramBins; ++b) block[b] /= double(n_sky);
  }
  return f;
}

IlluminationMapper::IlluminationMapper(Rng& rng) {
  layers.push_back(Linear(kIlluminationDim, kStyleDim, rng));
  for (int i = 0; i < 7; ++i) layers.push_back(Linear(kStyleDim, kStyleDim, rng));
}

Tensor IlluminationMapper::map_tensor(const Tensor& f) const {
  Tensor x = f;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    x = layers[i](x);
    if (i + 1 < layers.size()) x = leaky_relu(x);
  }
  return x;
}

StyleVector IlluminationMapper::operator()(const IlluminationFeature& f) const {
  return {map_tensor(f.tensor()), f.provenance};
}

void IlluminationMapper::collect(ParamMap& m, const std::string& prefix) const {
  for (std::size_t i = 0; i < layers.size(); ++i)
    layers[i].collect(m, prefix + ".fc" + std::to_string(i));
}

StyleVector null_style() {
  return {zeros({kStyleDim}), StyleProvenance::null};
}

IlluminationFeature sample_training_illumination(
    const std::vector<IlluminationFeature>& pool, Rng& rng) {
  if (pool.empty())
    throw std::invalid_argument("sample_training_illumination: empty pool");
  std::size_t idx = std::size_t(rng.next_u64() % pool.size());
  IlluminationFeature f = pool[idx];
  f.provenance = StyleProvenance::random_sampled;
  return f;
}

IlluminationFeature sample_training_illumination(
    const std::vector<IlluminationFeature>& pool, std::uint64_t rng_seed) {
  Rng rng(rng_seed);
  return sample_training_illumination(pool, rng);
}

}  // namespace s2d
