#pragma once

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace s2d {

// Dense channel-major image, values in [0,1] unless stated otherwise.
struct Image {
  std::size_t channels = 0, height = 0, width = 0;
  std::vector<double> values;  // channels * height * width

  Image() = default;
  Image(std::size_t c, std::size_t h, std::size_t w, double fill = 0.0)
      : channels(c), height(h), width(w), values(c * h * w, fill) {}

  double& at(std::size_t c, std::size_t y, std::size_t x) {
    return values[(c * height + y) * width + x];
  }
  double at(std::size_t c, std::size_t y, std::size_t x) const {
    return values[(c * height + y) * width + x];
  }
  std::size_t size() const { return values.size(); }
  bool same_shape(const Image& o) const {
    return channels == o.channels && height == o.height && width == o.width;
  }
};

}  // namespace s2d
