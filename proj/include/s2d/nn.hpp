#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "s2d/tensor.hpp"

namespace s2d {

// Deterministic RNG. Normal variates use Box-Muller with no cached spare so
// the state is exactly the mt19937_64 state (serializable as text).
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}
  double uniform();  // [0, 1)
  double normal();
  std::uint64_t next_u64() { return gen_(); }
  std::string state() const;
  void set_state(const std::string& s);

 private:
  std::mt19937_64 gen_;
};

Tensor randn(Rng& rng, const Shape& s, double stddev, bool requires_grad = true);

// Ordered registry of named learnable tensors; the checkpoint layout.
struct ParamMap {
  std::vector<std::pair<std::string, Tensor>> items;
  void add(const std::string& name, const Tensor& t) { items.push_back({name, t}); }
  std::vector<Tensor> tensors() const;
  Tensor find(const std::string& name) const;
};

struct Linear {
  Tensor weight;  // (out, in)
  Tensor bias;    // (out)

  Linear() = default;
  Linear(std::size_t in, std::size_t out, Rng& rng);
  // (N, in) -> (N, out); a rank-1 input is treated as a single row.
  Tensor operator()(const Tensor& x) const;
  void collect(ParamMap& m, const std::string& prefix) const;
  void zero_init();
};

// Single-image convolution over (C, H, W), square kernel.
struct Conv2d {
  Tensor weight;  // (out, in*k*k)
  Tensor bias;    // (out)
  std::size_t in_ch = 0, out_ch = 0, k = 0, stride = 1, pad = 0;

  Conv2d() = default;
  Conv2d(std::size_t in, std::size_t out, std::size_t kernel, std::size_t stride,
         std::size_t pad, Rng& rng);
  Tensor operator()(const Tensor& x) const;
  void collect(ParamMap& m, const std::string& prefix) const;
  void zero_init();
};

// StyleGAN2-style weight-modulated convolution: a style vector scales input
// channels and outputs are demodulated to unit expected norm.
struct ModulatedConv2d {
  Conv2d conv;     // holds the base weight
  Linear style;    // (style_dim -> in_ch), bias initialized to 1
  std::size_t style_dim = 0;

  ModulatedConv2d() = default;
  ModulatedConv2d(std::size_t in, std::size_t out, std::size_t kernel,
                  std::size_t style_dim, Rng& rng);
  Tensor operator()(const Tensor& x, const Tensor& w) const;
  void collect(ParamMap& m, const std::string& prefix) const;
};

// Cached resampling plans (keyed by spatial size).
PlanPtr plan_im2col(std::size_t c, std::size_t h, std::size_t w, std::size_t k,
                    std::size_t stride, std::size_t pad);
PlanPtr plan_upsample2x(std::size_t h, std::size_t w);   // bilinear
PlanPtr plan_avgpool2(std::size_t h, std::size_t w);
PlanPtr plan_crop(std::size_t h, std::size_t w, std::size_t r0, std::size_t c0,
                  std::size_t ch, std::size_t cw);

// (C, H, W) helpers built on the plans above.
Tensor upsample2x(const Tensor& x);
Tensor avgpool2(const Tensor& x);
Tensor crop(const Tensor& x, std::size_t r0, std::size_t c0, std::size_t ch,
            std::size_t cw);

struct Adam {
  double lr = 2e-3;
  double beta1 = 0.0;
  double beta2 = 0.99;
  double eps = 1e-8;
  std::size_t step_count = 0;
  std::vector<Tensor> params;
  std::vector<std::vector<double>> m, v;

  Adam() = default;
  Adam(std::vector<Tensor> ps, double lr, double beta1 = 0.0,
       double beta2 = 0.99);
  void step(const std::vector<Tensor>& grads);
};

}  // namespace s2d
