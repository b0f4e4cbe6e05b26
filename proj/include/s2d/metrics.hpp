#pragma once

#include <vector>

#include "s2d/image.hpp"

namespace s2d {

// 10*log10(1/MSE) on [0,1] images; +inf when the images are identical.
double psnr(const Image& a, const Image& b);

// Windowed SSIM on the channel-mean grayscale image: 11x11 Gaussian window
// (sigma 1.5), C1 = 0.01^2, C2 = 0.03^2, mean over valid window positions.
double ssim(const Image& a, const Image& b);

// Mean cosine similarity over aligned token pairs; tokens are rows of
// (N, D) matrices.
double dino_similarity(const std::vector<double>& tokens_a,
                       const std::vector<double>& tokens_b, std::size_t n,
                       std::size_t d);

}  // namespace s2d
