#include "s2d/metrics.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace s2d {

double psnr(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("psnr: shape mismatch");
  double mse = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = a.values[i] - b.values[i];
    mse += d * d;
  }
  mse /= double(a.values.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / mse);
}

static std::vector<double> grayscale(const Image& img) {
  std::vector<double> g(img.height * img.width, 0.0);
  for (std::size_t c = 0; c < img.channels; ++c)
    for (std::size_t i = 0; i < g.size(); ++i)
      g[i] += img.values[c * g.size() + i] / double(img.channels);
  return g;
}

double ssim(const Image& a, const Image& b) {
  if (!a.same_shape(b)) throw std::invalid_argument("ssim: shape mismatch");
  const std::size_t win = 11;
  if (a.height < win || a.width < win)
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");

  // Gaussian window, sigma 1.5, normalized
  double kernel[win * win];
  double ksum = 0.0;
  for (std::size_t y = 0; y < win; ++y)
    for (std::size_t x = 0; x < win; ++x) {
      double dy = double(y) - 5.0, dx = double(x) - 5.0;
      kernel[y * win + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
      ksum += kernel[y * win + x];
    }
  for (auto& k : kernel) k /= ksum;

  auto ga = grayscale(a), gb = grayscale(b);
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t oy = 0; oy + win <= a.height; ++oy)
    for (std::size_t ox = 0; ox + win <= a.width; ++ox) {
      double mu_a = 0, mu_b = 0, aa = 0, bb = 0, ab = 0;
      for (std::size_t y = 0; y < win; ++y)
        for (std::size_t x = 0; x < win; ++x) {
          double k = kernel[y * win + x];
          double va = ga[(oy + y) * a.width + ox + x];
          double vb = gb[(oy + y) * a.width + ox + x];
          mu_a += k * va;
          mu_b += k * vb;
          aa += k * va * va;
          bb += k * vb * vb;
          ab += k * va * vb;
        }
      double var_a = aa - mu_a * mu_a;
      double var_b = bb - mu_b * mu_b;
      double cov = ab - mu_a * mu_b;
      total += ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  return total / double(count);
}

double dino_similarity(const std::vector<double>& tokens_a,
                       const std::vector<double>& tokens_b, std::size_t n,
                       std::size_t d) {
  if (tokens_a.size() != n * d || tokens_b.size() != n * d)
    throw std::invalid_argument("dino_similarity: token matrix size mismatch");
  if (n == 0) throw std::invalid_argument("dino_similarity: no tokens");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t j = 0; j < d; ++j) {
      double x = tokens_a[i * d + j], y = tokens_b[i * d + j];
      dot += x * y;
      na += x * x;
      nb += y * y;
    }
    if (na == 0.0 || nb == 0.0)
      throw std::invalid_argument("dino_similarity: zero-norm token");
    total += dot / (std::sqrt(na) * std::sqrt(nb));
  }
  return total / double(n);
}

}  // namespace s2d
