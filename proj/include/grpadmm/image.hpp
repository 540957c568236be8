#pragma once

#include <algorithm>

#include "grpadmm/core.hpp"

namespace grpadmm {

struct ImageShape {
  Index height = 0;
  Index width = 0;

  Index size() const { return height * width; }
  bool operator==(const ImageShape&) const = default;
};

/// Row-major image with nominal pixel range [0,1].
class Image2D {
 public:
  Image2D(ImageShape shape, Vector pixels) : shape_(shape), pixels_(std::move(pixels)) {
    if (shape.height <= 0 || shape.width <= 0) throw std::invalid_argument("Image2D: empty shape");
    require_size(pixels_.size(), shape.size(), "Image2D pixels");
  }
  explicit Image2D(ImageShape shape, double fill = 0.0)
      : Image2D(shape, Vector::Constant(shape.size(), fill)) {}

  const ImageShape& shape() const { return shape_; }
  Index height() const { return shape_.height; }
  Index width() const { return shape_.width; }
  const Vector& pixels() const { return pixels_; }
  Vector& pixels() { return pixels_; }

  double operator()(Index row, Index col) const { return pixels_[row * shape_.width + col]; }
  double& operator()(Index row, Index col) { return pixels_[row * shape_.width + col]; }

  Image2D clipped(double lo = 0.0, double hi = 1.0) const {
    return Image2D(shape_, pixels_.cwiseMax(lo).cwiseMin(hi));
  }

 private:
  ImageShape shape_;
  Vector pixels_;
};

}  // namespace grpadmm
