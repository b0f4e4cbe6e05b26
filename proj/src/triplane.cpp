#include "s2d/triplane.hpp"

#include <cmath>
#include <stdexcept>

namespace s2d {

void TriPlane::validate() const {
  const Shape &a = xy.shape(), &b = zy.shape(), &c = xz.shape();
  if (a.size() != 3 || a[1] != a[2])
    throw std::invalid_argument("tri-plane maps must be (C,R,R)");
  if (a != b || a != c)
    throw std::invalid_argument("tri-plane maps must share shape");
  for (const Tensor* t : {&xy, &zy, &xz})
    for (double v : t->data())
      if (!std::isfinite(v))
        throw std::invalid_argument("tri-plane contains non-finite values");
}

TriPlane split_planes(const Tensor& f_img) {
  const Shape& s = f_img.shape();
  if (s.size() != 3) throw std::invalid_argument("split_planes: expected (C,R,R)");
  if (s[0] % 3 != 0)
    throw std::invalid_argument("split_planes: channel count " +
                                std::to_string(s[0]) + " not divisible by 3");
  std::size_t c = s[0] / 3;
  TriPlane p;
  p.xy = slice0(f_img, 0, c);
  p.zy = slice0(f_img, c, c);
  p.xz = slice0(f_img, 2 * c, c);
  return p;
}

TriPlaneGenerator::TriPlaneGenerator(const TriPlaneGeneratorConfig& cfg_, Rng& rng)
    : cfg(cfg_) {
  if (cfg.input_size >> cfg.depth == 0)
    throw std::invalid_argument("tri-plane generator: depth too large for input");
  stem = Conv2d(3, cfg.base_channels, 3, 1, 1, rng);
  std::size_t ch = cfg.base_channels;
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    enc.push_back(Conv2d(ch, ch * 2, 3, 2, 1, rng));
    ch *= 2;
  }
  for (std::size_t i = 0; i < cfg.depth; ++i) {
    // upsampled features concatenated with the encoder skip at that scale
    dec.push_back(Conv2d(ch + ch / 2, ch / 2, 3, 1, 1, rng));
    ch /= 2;
  }
  head = Conv2d(cfg.base_channels, 3 * cfg.plane_channels, 1, 1, 0, rng);
}

Tensor TriPlaneGenerator::forward(const Tensor& sat_image) const {
  const Shape& s = sat_image.shape();
  if (s.size() != 3 || s[0] != 3 || s[1] != cfg.input_size || s[2] != cfg.input_size)
    throw std::invalid_argument("tri-plane generator: expected (3," +
                                std::to_string(cfg.input_size) + "," +
                                std::to_string(cfg.input_size) + "), got " +
                                shape_str(s));
  std::vector<Tensor> skips;
  Tensor x = leaky_relu(stem(sat_image));
  for (const auto& e : enc) {
    skips.push_back(x);
    x = leaky_relu(e(x));
  }
  for (std::size_t i = 0; i < dec.size(); ++i) {
    Tensor up = upsample2x(x);
    x = leaky_relu(dec[i](concat0({up, skips[skips.size() - 1 - i]})));
  }
  return head(x);
}

TriPlane TriPlaneGenerator::generate(const Tensor& sat_image) const {
  return split_planes(forward(sat_image));
}

void TriPlaneGenerator::collect(ParamMap& m, const std::string& prefix) const {
  stem.collect(m, prefix + ".stem");
  for (std::size_t i = 0; i < enc.size(); ++i)
    enc[i].collect(m, prefix + ".enc" + std::to_string(i));
  for (std::size_t i = 0; i < dec.size(); ++i)
    dec[i].collect(m, prefix + ".dec" + std::to_string(i));
  head.collect(m, prefix + ".head");
}

namespace {

// Bilinear taps for one plane; u is the column coordinate, v the row
// coordinate, both in [-1,1] with texel centers at (i+0.5)/R*2-1.
PlanPtr sample_plan(std::size_t r, const std::vector<double>& u,
                    const std::vector<double>& v) {
  PlanBuilder b(r * r);
  auto cl = [r](double x) {
    return std::min(double(r - 1), std::max(0.0, x));
  };
  for (std::size_t i = 0; i < u.size(); ++i) {
    b.begin_row();
    double px = cl((u[i] + 1.0) * 0.5 * double(r) - 0.5);
    double py = cl((v[i] + 1.0) * 0.5 * double(r) - 0.5);
    std::size_t x0 = std::size_t(px), y0 = std::size_t(py);
    std::size_t x1 = std::min(x0 + 1, r - 1), y1 = std::min(y0 + 1, r - 1);
    double ax = px - double(x0), ay = py - double(y0);
    b.tap(y0 * r + x0, (1 - ay) * (1 - ax));
    b.tap(y0 * r + x1, (1 - ay) * ax);
    b.tap(y1 * r + x0, ay * (1 - ax));
    b.tap(y1 * r + x1, ay * ax);
  }
  return b.finish();
}

Tensor sample_plane(const Tensor& plane, const std::vector<double>& u,
                    const std::vector<double>& v) {
  std::size_t c = plane.shape()[0], r = plane.shape()[1];
  Tensor flat = reshape(plane, {c, r * r});
  return apply_plan(flat, sample_plan(r, u, v));  // (C, P)
}

}  // namespace

QueryResult query_points(const TriPlane& planes, const std::vector<Vec3>& pts) {
  std::size_t p = pts.size();
  std::vector<double> xs(p), ys(p), zs(p);
  QueryResult out;
  out.outside.resize(p);
  for (std::size_t i = 0; i < p; ++i) {
    xs[i] = pts[i].x;
    ys[i] = pts[i].y;
    zs[i] = pts[i].z;
    out.outside[i] = std::abs(pts[i].x) > 1.0 || std::abs(pts[i].y) > 1.0 ||
                     std::abs(pts[i].z) > 1.0;
  }
  Tensor fxy = sample_plane(planes.xy, xs, ys);
  Tensor fzy = sample_plane(planes.zy, zs, ys);
  Tensor fxz = sample_plane(planes.xz, xs, zs);
  out.features = transpose(concat0({fxy, fzy, fxz}));  // (P, 3C)
  return out;
}

}  // namespace s2d
