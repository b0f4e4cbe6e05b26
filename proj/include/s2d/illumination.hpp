#pragma once

#include <cstdint>
#include <vector>

#include "s2d/image.hpp"
#include "s2d/nn.hpp"
#include "s2d/tensor.hpp"

namespace s2d {

inline constexpr std::size_t kHistogramBins = 90;
inline constexpr std::size_t kIlluminationDim = 3 * kHistogramBins;  // 270
inline constexpr std::size_t kStyleDim = 512;

struct SkyMask {
  std::size_t width = 0, height = 0;
  std::vector<std::uint8_t> values;  // 1 = sky, 0 = ground

  std::size_t sky_count() const;
  // Binarizes a 1-channel image at 0.5; sets *warned when any value was not
  // already exactly 0 or 1.
  static SkyMask from_image(const Image& gray, bool* warned = nullptr);
};

enum class StyleProvenance { real, random_sampled, null };

// 270-dim normalized R||G||B sky color histogram.
struct IlluminationFeature {
  std::vector<double> values;
  StyleProvenance provenance = StyleProvenance::real;

  bool is_zero() const;
  Tensor tensor() const;
};

struct StyleVector {
  Tensor w;  // (512)
  StyleProvenance provenance = StyleProvenance::real;
};

// 8 fully connected 512-wide layers with leaky-rectifier activations.
struct IlluminationMapper {
  std::vector<Linear> layers;

  IlluminationMapper() = default;
  explicit IlluminationMapper(Rng& rng);
  StyleVector operator()(const IlluminationFeature& f) const;
  Tensor map_tensor(const Tensor& f) const;
  void collect(ParamMap& m, const std::string& prefix) const;
};

// Histograms of sky pixels over 90 uniform bins on [0,255] per channel,
// normalized by the sky pixel count; exact zero when the mask is empty.
// `pano` carries intensities in [0,255].
IlluminationFeature extract_illumination(const Image& pano, const SkyMask& mask);

StyleVector null_style();

IlluminationFeature sample_training_illumination(
    const std::vector<IlluminationFeature>& pool, std::uint64_t rng_seed);
IlluminationFeature sample_training_illumination(
    const std::vector<IlluminationFeature>& pool, Rng& rng);

}  // namespace s2d
