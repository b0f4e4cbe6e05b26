#include "s2d/nn.hpp"

#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>

namespace s2d {

double Rng::uniform() {
  // 53-bit mantissa draw
  return double(gen_() >> 11) * (1.0 / 9007199254740992.0);
}

double Rng::normal() {
  double u1 = uniform(), u2 = uniform();
  while (u1 <= 1e-300) u1 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

std::string Rng::state() const {
  std::ostringstream os;
  os << gen_;
  return os.str();
}

void Rng::set_state(const std::string& s) {
  std::istringstream is(s);
  is >> gen_;
  if (is.fail()) throw std::invalid_argument("bad rng state string");
}

Tensor randn(Rng& rng, const Shape& s, double stddev, bool requires_grad) {
  std::vector<double> v(shape_size(s));
  for (auto& x : v) x = rng.normal() * stddev;
  return leaf(std::move(v), s, requires_grad);
}

std::vector<Tensor> ParamMap::tensors() const {
  std::vector<Tensor> out;
  out.reserve(items.size());
  for (const auto& [name, t] : items) out.push_back(t);
  return out;
}

Tensor ParamMap::find(const std::string& name) const {
  for (const auto& [n, t] : items)
    if (n == name) return t;
  throw std::out_of_range("parameter not found: " + name);
}

// ---- Linear ----

Linear::Linear(std::size_t in, std::size_t out, Rng& rng) {
  weight = randn(rng, {out, in}, 1.0 / std::sqrt(double(in)));
  bias = leaf(std::vector<double>(out, 0.0), {out}, true);
}

Tensor Linear::operator()(const Tensor& x) const {
  Tensor x2 = x.shape().size() == 1 ? reshape(x, {1, x.size()}) : x;
  Tensor y = matmul(x2, transpose(weight)) + bias;
  if (x.shape().size() == 1) return reshape(y, {y.size()});
  return y;
}

void Linear::collect(ParamMap& m, const std::string& prefix) const {
  m.add(prefix + ".weight", weight);
  m.add(prefix + ".bias", bias);
}

void Linear::zero_init() {
  std::fill(weight.data().begin(), weight.data().end(), 0.0);
  std::fill(bias.data().begin(), bias.data().end(), 0.0);
}

// ---- plans ----

namespace {
std::uint64_t key4(std::size_t a, std::size_t b, std::size_t c, std::size_t d) {
  return (std::uint64_t(a) << 48) ^ (std::uint64_t(b) << 32) ^
         (std::uint64_t(c) << 16) ^ std::uint64_t(d);
}
}  // namespace

PlanPtr plan_im2col(std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                    std::size_t stride, std::size_t pad) {
  static std::map<std::tuple<std::size_t, std::size_t, std::size_t, std::size_t,
                             std::size_t, std::size_t>,
                  PlanPtr>
      cache;
  auto ck = std::make_tuple(c, h, w, k, stride, pad);
  auto it = cache.find(ck);
  if (it != cache.end()) return it->second;

  std::size_t oh = (h + 2 * pad - k) / stride + 1;
  std::size_t ow = (w + 2 * pad - k) / stride + 1;
  PlanBuilder b(c * h * w);
  for (std::size_t ci = 0; ci < c; ++ci)
    for (std::size_t ky = 0; ky < k; ++ky)
      for (std::size_t kx = 0; kx < k; ++kx)
        for (std::size_t oy = 0; oy < oh; ++oy)
          for (std::size_t ox = 0; ox < ow; ++ox) {
            b.begin_row();
            std::ptrdiff_t iy = std::ptrdiff_t(oy * stride + ky) - std::ptrdiff_t(pad);
            std::ptrdiff_t ix = std::ptrdiff_t(ox * stride + kx) - std::ptrdiff_t(pad);
            if (iy >= 0 && iy < std::ptrdiff_t(h) && ix >= 0 &&
                ix < std::ptrdiff_t(w))
              b.tap(ci * h * w + std::size_t(iy) * w + std::size_t(ix), 1.0);
          }
  return cache[ck] = b.finish();
}

PlanPtr plan_upsample2x(std::size_t h, std::size_t w) {
  static std::map<std::uint64_t, PlanPtr> cache;
  std::uint64_t ck = key4(h, w, 0, 1);
  auto it = cache.find(ck);
  if (it != cache.end()) return it->second;

  std::size_t oh = 2 * h, ow = 2 * w;
  PlanBuilder b(h * w);
  for (std::size_t oy = 0; oy < oh; ++oy)
    for (std::size_t ox = 0; ox < ow; ++ox) {
      b.begin_row();
      // align_corners=false mapping, clamped at the borders
      double sy = (double(oy) + 0.5) / 2.0 - 0.5;
      double sx = (double(ox) + 0.5) / 2.0 - 0.5;
      double fy = std::floor(sy), fx = std::floor(sx);
      double ay = sy - fy, ax = sx - fx;
      auto cl = [](double v, std::size_t n) {
        return std::size_t(std::min(double(n - 1), std::max(0.0, v)));
      };
      std::size_t y0 = cl(fy, h), y1 = cl(fy + 1, h);
      std::size_t x0 = cl(fx, w), x1 = cl(fx + 1, w);
      // duplicate taps at clamped borders just add up
      b.tap(y0 * w + x0, (1 - ay) * (1 - ax));
      b.tap(y0 * w + x1, (1 - ay) * ax);
      b.tap(y1 * w + x0, ay * (1 - ax));
      b.tap(y1 * w + x1, ay * ax);
    }
  return cache[ck] = b.finish();
}

PlanPtr plan_avgpool2(std::size_t h, std::size_t w) {
  static std::map<std::uint64_t, PlanPtr> cache;
  std::uint64_t ck = key4(h, w, 0, 2);
  auto it = cache.find(ck);
  if (it != cache.end()) return it->second;
  if (h % 2 || w % 2) throw std::invalid_argument("avgpool2: odd spatial size");
  PlanBuilder b(h * w);
  for (std::size_t oy = 0; oy < h / 2; ++oy)
    for (std::size_t ox = 0; ox < w / 2; ++ox) {
      b.begin_row();
      for (std::size_t dy = 0; dy < 2; ++dy)
        for (std::size_t dx = 0; dx < 2; ++dx)
          b.tap((2 * oy + dy) * w + 2 * ox + dx, 0.25);
    }
  return cache[ck] = b.finish();
}

PlanPtr plan_crop(std::size_t h, std::size_t w, std::size_t r0, std::size_t c0,
                  std::size_t ch, std::size_t cw) {
  if (r0 + ch > h || c0 + cw > w)
    throw std::invalid_argument("crop window out of bounds");
  PlanBuilder b(h * w);
  for (std::size_t y = 0; y < ch; ++y)
    for (std::size_t x = 0; x < cw; ++x) {
      b.begin_row();
      b.tap((r0 + y) * w + (c0 + x), 1.0);
    }
  return b.finish();
}

static void check_chw(const Tensor& x, const char* who) {
  if (x.shape().size() != 3)
    throw std::invalid_argument(std::string(who) + ": expected (C,H,W), got " +
                                shape_str(x.shape()));
}

Tensor upsample2x(const Tensor& x) {
  check_chw(x, "upsample2x");
  std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  Tensor flat = reshape(x, {c, h * w});
  Tensor y = apply_plan(flat, plan_upsample2x(h, w));
  return reshape(y, {c, 2 * h, 2 * w});
}

Tensor avgpool2(const Tensor& x) {
  check_chw(x, "avgpool2");
  std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  Tensor y = apply_plan(reshape(x, {c, h * w}), plan_avgpool2(h, w));
  return reshape(y, {c, h / 2, w / 2});
}

Tensor crop(const Tensor& x, std::size_t r0, std::size_t c0, std::size_t ch,
            std::size_t cw) {
  check_chw(x, "crop");
  std::size_t c = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
  Tensor y = apply_plan(reshape(x, {c, h * w}), plan_crop(h, w, r0, c0, ch, cw));
  return reshape(y, {c, ch, cw});
}

// ---- Conv2d ----

Conv2d::Conv2d(std::size_t in, std::size_t out, std::size_t kernel,
               std::size_t stride_, std::size_t pad_, Rng& rng)
    : in_ch(in), out_ch(out), k(kernel), stride(stride_), pad(pad_) {
  double fan_in = double(in * kernel * kernel);
  weight = randn(rng, {out, in * kernel * kernel}, 1.0 / std::sqrt(fan_in));
  bias = leaf(std::vector<double>(out, 0.0), {out}, true);
}

Tensor Conv2d::operator()(const Tensor& x) const {
  check_chw(x, "conv2d");
  if (x.shape()[0] != in_ch)
    throw std::invalid_argument("conv2d: channel mismatch, got " +
                                shape_str(x.shape()));
  std::size_t h = x.shape()[1], w = x.shape()[2];
  std::size_t oh = (h + 2 * pad - k) / stride + 1;
  std::size_t ow = (w + 2 * pad - k) / stride + 1;
  PlanPtr plan = plan_im2col(in_ch, h, w, k, stride, pad);
  Tensor cols = apply_plan(reshape(x, {in_ch * h * w}), plan);
  cols = reshape(cols, {in_ch * k * k, oh * ow});
  Tensor y = matmul(weight, cols) + reshape(bias, {out_ch, 1});
  return reshape(y, {out_ch, oh, ow});
}

void Conv2d::collect(ParamMap& m, const std::string& prefix) const {
  m.add(prefix + ".weight", weight);
  m.add(prefix + ".bias", bias);
}

void Conv2d::zero_init() {
  std::fill(weight.data().begin(), weight.data().end(), 0.0);
  std::fill(bias.data().begin(), bias.data().end(), 0.0);
}

// ---- ModulatedConv2d ----

ModulatedConv2d::ModulatedConv2d(std::size_t in, std::size_t out,
                                 std::size_t kernel, std::size_t style_dim_,
                                 Rng& rng)
    : conv(in, out, kernel, 1, kernel / 2, rng), style_dim(style_dim_) {
  style = Linear(style_dim_, in, rng);
  std::fill(style.bias.data().begin(), style.bias.data().end(), 1.0);
}

Tensor ModulatedConv2d::operator()(const Tensor& x, const Tensor& w) const {
  check_chw(x, "modulated_conv2d");
  Tensor s = style(w);  // (in)
  std::size_t in = conv.in_ch, out = conv.out_ch, kk = conv.k * conv.k;
  // demodulation: per-output-channel norm of the modulated kernel
  Tensor wmod = reshape(conv.weight, {out, in, kk}) * reshape(s, {1, in, 1});
  Tensor denom = sqrt(sum_axis(sum_axis(square(wmod), 2), 1) + 1e-8);  // (out)
  Tensor y = conv(x * reshape(s, {in, 1, 1}));
  Tensor yb = y - reshape(conv.bias, {out, 1, 1});  // bias applied after demod
  return yb / reshape(denom, {out, 1, 1}) + reshape(conv.bias, {out, 1, 1});
}

void ModulatedConv2d::collect(ParamMap& m, const std::string& prefix) const {
  conv.collect(m, prefix + ".conv");
  style.collect(m, prefix + ".style");
}

// ---- Adam ----

Adam::Adam(std::vector<Tensor> ps, double lr_, double beta1_, double beta2_)
    : lr(lr_), beta1(beta1_), beta2(beta2_), params(std::move(ps)) {
  m.resize(params.size());
  v.resize(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    m[i].assign(params[i].size(), 0.0);
    v[i].assign(params[i].size(), 0.0);
  }
}

void Adam::step(const std::vector<Tensor>& grads) {
  if (grads.size() != params.size())
    throw std::invalid_argument("adam: gradient count mismatch");
  ++step_count;
  double c1 = 1.0 - std::pow(beta1, double(step_count));
  double c2 = 1.0 - std::pow(beta2, double(step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& p = params[i].data();
    const auto& g = grads[i].data();
    if (g.size() != p.size()) throw std::invalid_argument("adam: shape mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[i][j] = beta1 * m[i][j] + (1.0 - beta1) * g[j];
      v[i][j] = beta2 * v[i][j] + (1.0 - beta2) * g[j] * g[j];
      double mh = m[i][j] / c1, vh = v[i][j] / c2;
      p[j] -= lr * mh / (std::sqrt(vh) + eps);
    }
  }
}

}  // namespace s2d
