#pragma once

#include <map>
#include <string>

#include "s2d/illumination.hpp"
#include "s2d/nn.hpp"
#include "s2d/tensor.hpp"

namespace s2d {

struct LossWeights {
  double d_str = 1.0;
  double d_sat = 1.0;
  double sat = 30.0;
  double str = 10.0;
  double sky = 10.0;
  double opa = 25.0;

  void validate() const;
};

// Mean BCE between ground opacity and the non-sky target 1 - mask,
// with the opacity clamped to [eps, 1-eps].
Tensor opacity_loss(const Tensor& opacity, const SkyMask& sky_mask);

// Mean absolute error over masked (sky) pixels and channels; zero when the
// mask is empty.
Tensor sky_loss(const Tensor& sky_image, const Tensor& street_gt,
                const SkyMask& mask);

// Fixed random convolutional feature pyramid with an L2 feature distance.
// A stand-in for pretrained perceptual backbones behind the same interface.
struct PerceptualDistance {
  std::vector<Conv2d> layers;

  PerceptualDistance() = default;
  PerceptualDistance(std::size_t in_channels, std::uint64_t seed);
  Tensor distance(const Tensor& a, const Tensor& b) const;
};

// L1 + perceptual, used for both street and satellite reconstruction.
Tensor reconstruction_loss(const Tensor& pred, const Tensor& gt,
                           const PerceptualDistance& perceptual);

// Strided-convolution classifier ending in one logit; street variant takes
// 6 channels (final image || upsampled raw render), satellite takes 3.
struct Discriminator {
  std::vector<Conv2d> convs;
  Linear head;
  std::size_t in_channels = 0;

  Discriminator() = default;
  Discriminator(std::size_t in_channels, std::size_t base_channels, Rng& rng);
  Tensor operator()(const Tensor& img) const;  // -> (1) logit
  void collect(ParamMap& m, const std::string& prefix) const;
};

// Non-saturating losses; R1 penalizes the gradient of D at the real input.
struct GanLosses {
  Tensor g_loss;      // softplus(-D(fake)), graph reaches the generator
  Tensor d_loss;      // softplus(D(fake.detach())) + softplus(-D(real))
  Tensor r1_penalty;  // (gamma/2) * ||grad_real D(real)||^2
};
GanLosses gan_losses(const Discriminator& d, const Tensor& real,
                     const Tensor& fake, double r1_gamma);

struct LossParts {
  Tensor sat, str, sky, opa;          // reconstruction-side terms
  Tensor g_str, g_sat;                // generator-side adversarial terms
};

struct TotalLoss {
  Tensor total;
  std::map<std::string, double> breakdown;
};
// L_recon = w.sat*sat + w.str*str + w.sky*sky; total = L_recon +
// w.opa*opa + w.d_str*g_str + w.d_sat*g_sat. Undefined parts contribute 0.
TotalLoss total_loss(const LossParts& parts, const LossWeights& weights);

}  // namespace s2d
