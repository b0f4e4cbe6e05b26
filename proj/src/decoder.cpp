#include "s2d/decoder.hpp"

#include <cmath>
#include <stdexcept>

namespace s2d {

FieldDecoder::FieldDecoder(DecoderVariant variant_, std::size_t feature_dim_,
                           std::size_t hidden_dim_, Rng& rng)
    : variant(variant_), feature_dim(feature_dim_), hidden_dim(hidden_dim_) {
  first = Linear(feature_dim, hidden_dim, rng);
  if (variant == DecoderVariant::adaptive) {
    density_head = Linear(hidden_dim, 1, rng);
    color_head = Linear(hidden_dim, kAppearanceDim, rng);
    color_style =
        randn(rng, {kAppearanceDim, kStyleDim}, 1.0 / std::sqrt(double(kStyleDim)));
  } else {
    joint_head = Linear(hidden_dim, kAppearanceDim + 1, rng);
  }
}

FieldDecoder::Batch FieldDecoder::decode_batch(const Tensor& features,
                                               const StyleVector& w) const {
  const Shape& s = features.shape();
  if (s.size() != 2 || s[1] != feature_dim)
    throw std::invalid_argument("decode: expected (P," +
                                std::to_string(feature_dim) + "), got " +
                                shape_str(s));
  if (w.w.size() != kStyleDim)
    throw std::invalid_argument("decode: style vector must have 512 entries");

  Tensor hidden = leaky_relu(first(features));  // (P, h)
  Batch out;
  if (variant == DecoderVariant::adaptive) {
    out.sigma = softplus(density_head(hidden));
    // concat(hidden, w) through one affine layer, with the style half
    // factored out so the shared term is computed once per batch
    Tensor style_part = matmul(reshape(w.w, {1, kStyleDim}), transpose(color_style));
    out.phi = color_head(hidden) + style_part;  // broadcast over rows
  } else {
    Tensor joint = joint_head(hidden);  // (P, 33), style ignored
    out.sigma = softplus(slice_cols(joint, 0, 1));
    out.phi = slice_cols(joint, 1, kAppearanceDim);
  }
  return out;
}

FieldDecoder::Sample FieldDecoder::decode(const std::vector<double>& f_tri,
                                          const StyleVector& w) const {
  Tensor f = from_vector(f_tri, {1, f_tri.size()});
  Batch b = decode_batch(f, w);
  return {b.sigma.item(), b.phi.data()};
}

void FieldDecoder::collect(ParamMap& m, const std::string& prefix) const {
  first.collect(m, prefix + ".first");
  if (variant == DecoderVariant::adaptive) {
    density_head.collect(m, prefix + ".density");
    color_head.collect(m, prefix + ".color");
    m.add(prefix + ".color_style", color_style);
  } else {
    joint_head.collect(m, prefix + ".joint");
  }
}

}  // namespace s2d
