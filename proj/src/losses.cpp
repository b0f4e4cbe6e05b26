#include "s2d/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace s2d {

void LossWeights::validate() const {
  for (double w : {d_str, d_sat, sat, str, sky, opa})
    if (w < 0.0 || !std::isfinite(w))
      throw std::invalid_argument("loss weights must be finite and >= 0");
}

Tensor opacity_loss(const Tensor& opacity, const SkyMask& sky_mask) {
  const Shape& s = opacity.shape();
  if (s.size() != 3 || s[0] != 1 || s[1] != sky_mask.height || s[2] != sky_mask.width)
    throw std::invalid_argument("opacity_loss: opacity/mask shape mismatch");
  // compositing sums can overshoot [0,1] by a few ulps when nearly opaque
  for (double v : opacity.data())
    if (v < -1e-9 || v > 1.0 + 1e-9)
      throw std::invalid_argument("opacity_loss: opacity outside [0,1]");

  std::vector<double> target(sky_mask.values.size());
  for (std::size_t i = 0; i < target.size(); ++i)
    target[i] = 1.0 - double(sky_mask.values[i]);
  Tensor t = from_vector(std::move(target), s);

  // eps inside the log keeps the gradient alive at fully transparent/opaque
  const double eps = 1e-6;
  return mean(-(t * log(opacity + eps) + (1.0 - t) * log(1.0 - opacity + eps)));
}

Tensor sky_loss(const Tensor& sky_image, const Tensor& street_gt,
                const SkyMask& mask) {
  const Shape& s = sky_image.shape();
  if (s != street_gt.shape() || s.size() != 3 || s[0] != 3 ||
      s[1] != mask.height || s[2] != mask.width)
    throw std::invalid_argument("sky_loss: shape mismatch");
  std::size_t n_sky = mask.sky_count();
  if (n_sky == 0) return scalar(0.0);

  std::vector<double> m(mask.values.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = double(mask.values[i]);
  Tensor mt = from_vector(std::move(m), {1, mask.height, mask.width});
  Tensor masked = mt * abs(sky_image - street_gt);
  return sum(masked) / (3.0 * double(n_sky));
}

// ---- perceptual ----

PerceptualDistance::PerceptualDistance(std::size_t in_channels,
                                       std::uint64_t seed) {
  Rng rng(seed);
  std::size_t chans[4] = {in_channels, 8, 16, 16};
  for (int i = 0; i < 3; ++i) {
    Conv2d c(chans[i], chans[i + 1], 3, 2, 1, rng);
    // frozen filters: detach from gradient tracking
    c.weight = c.weight.detach();
    c.bias = c.bias.detach();
    layers.push_back(std::move(c));
  }
}

Tensor PerceptualDistance::distance(const Tensor& a, const Tensor& b) const {
  if (a.shape() != b.shape())
    throw std::invalid_argument("perceptual distance: shape mismatch");
  Tensor fa = a, fb = b;
  Tensor acc = scalar(0.0);
  for (const auto& l : layers) {
    fa = leaky_relu(l(fa));
    fb = leaky_relu(l(fb));
    acc = acc + mean(square(fa - fb));
  }
  return acc;
}

Tensor reconstruction_loss(const Tensor& pred, const Tensor& gt,
                           const PerceptualDistance& perceptual) {
  if (pred.shape() != gt.shape())
    throw std::invalid_argument("reconstruction_loss: shape mismatch, " +
                                shape_str(pred.shape()) + " vs " +
                                shape_str(gt.shape()));
  return mean(abs(pred - gt)) + perceptual.distance(pred, gt);
}

// ---- discriminator ----

Discriminator::Discriminator(std::size_t in_channels_, std::size_t base,
                             Rng& rng)
    : in_channels(in_channels_) {
  convs.push_back(Conv2d(in_channels_, base, 3, 2, 1, rng));
  convs.push_back(Conv2d(base, base * 2, 3, 2, 1, rng));
  convs.push_back(Conv2d(base * 2, base * 2, 3, 2, 1, rng));
  head = Linear(base * 2, 1, rng);
}

Tensor Discriminator::operator()(const Tensor& img) const {
  if (img.shape().size() != 3 || img.shape()[0] != in_channels)
    throw std::invalid_argument("discriminator: expected (" +
                                std::to_string(in_channels) + ",H,W), got " +
                                shape_str(img.shape()));
  Tensor x = img;
  for (const auto& c : convs) x = leaky_relu(c(x));
  std::size_t ch = x.shape()[0], hw = x.shape()[1] * x.shape()[2];
  Tensor pooled = sum_axis(reshape(x, {ch, hw}), 1) * (1.0 / double(hw));
  return head(pooled);  // (1)
}

void Discriminator::collect(ParamMap& m, const std::string& prefix) const {
  for (std::size_t i = 0; i < convs.size(); ++i)
    convs[i].collect(m, prefix + ".conv" + std::to_string(i));
  head.collect(m, prefix + ".head");
}

GanLosses gan_losses(const Discriminator& d, const Tensor& real,
                     const Tensor& fake, double r1_gamma) {
  if (real.shape() != fake.shape())
    throw std::invalid_argument("gan_losses: real/fake shape mismatch");

  GanLosses out;
  out.g_loss = softplus(-d(fake));
  out.d_loss = softplus(d(fake.detach())) + softplus(-d(real.detach()));

  // R1 on the real input: differentiate the logit w.r.t. the image, then
  // penalize the squared gradient norm (still differentiable in d's params)
  Tensor x = leaf(real.data(), real.shape(), true);
  Tensor logit = d(x);
  Tensor gx = grad(logit, {x})[0];
  out.r1_penalty = (r1_gamma / 2.0) * sum(square(gx));
  return out;
}

TotalLoss total_loss(const LossParts& parts, const LossWeights& weights) {
  weights.validate();
  TotalLoss out;
  out.total = scalar(0.0);
  auto take = [&](const Tensor& t, double w, const char* name) {
    double v = t.defined() ? t.item() : 0.0;
    if (!std::isfinite(v))
      throw std::runtime_error(std::string("non-finite loss term: ") + name);
    out.breakdown[name] = v;
    out.breakdown[std::string(name) + "_weighted"] = w * v;
    if (t.defined() && w != 0.0) out.total = out.total + w * t;
  };
  take(parts.sat, weights.sat, "sat");
  take(parts.str, weights.str, "str");
  take(parts.sky, weights.sky, "sky");
  take(parts.opa, weights.opa, "opa");
  take(parts.g_str, weights.d_str, "g_str");
  take(parts.g_sat, weights.d_sat, "g_sat");
  out.breakdown["total"] = out.total.item();
  return out;
}

}  // namespace s2d
