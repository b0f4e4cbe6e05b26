#pragma once

#include <vector>

#include "s2d/illumination.hpp"
#include "s2d/nn.hpp"
#include "s2d/tensor.hpp"

namespace s2d {

enum class DecoderVariant { adaptive, vanilla };

inline constexpr std::size_t kAppearanceDim = 32;

// Maps a 96-dim tri-plane feature (and, in the adaptive variant, the
// illumination style vector) to density sigma and a 32-dim appearance
// feature phi. The adaptive density branch has no path from the style
// vector, so density is structurally illumination-invariant.
struct FieldDecoder {
  DecoderVariant variant = DecoderVariant::adaptive;
  std::size_t feature_dim = 96;
  std::size_t hidden_dim = 64;

  Linear first;         // feature_dim -> hidden
  Linear density_head;  // hidden -> 1             (adaptive)
  Linear color_head;    // hidden -> 32            (adaptive)
  Tensor color_style;   // (32, 512), style half of the concat-linear color head
  Linear joint_head;    // hidden -> 33            (vanilla)

  FieldDecoder() = default;
  FieldDecoder(DecoderVariant variant, std::size_t feature_dim,
               std::size_t hidden_dim, Rng& rng);

  struct Batch {
    Tensor sigma;  // (P, 1), softplus-activated
    Tensor phi;    // (P, 32); channels 0-2 are the raw color
  };
  // features (P, feature_dim); one style vector broadcast over the batch.
  Batch decode_batch(const Tensor& features, const StyleVector& w) const;

  struct Sample {
    double sigma;
    std::vector<double> phi;
  };
  Sample decode(const std::vector<double>& f_tri, const StyleVector& w) const;

  void collect(ParamMap& m, const std::string& prefix) const;
};

}  // namespace s2d
