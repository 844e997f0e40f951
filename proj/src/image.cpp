#include "mdm/image.hpp"

#include <string>

#include "mdm/error.hpp"

namespace mdm {

GrayImage::GrayImage(std::size_t width, std::size_t height, std::vector<double> data)
    : width_(width), height_(height), data_(std::move(data)) {
  if (width_ == 0 || height_ == 0) {
    throw Error(Errc::ZeroDimension, "image has zero width or height");
  }
  if (data_.size() != width_ * height_) {
    throw Error(Errc::InvalidArgument, "pixel count " + std::to_string(data_.size()) +
                                           " does not match " + std::to_string(width_) + "x" +
                                           std::to_string(height_));
  }
  for (double v : data_) {
    // NaN fails both comparisons and is rejected too.
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(Errc::InvalidArgument, "intensity outside [0,1]");
    }
  }
}

}  // namespace mdm
