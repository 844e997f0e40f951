#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mdm {

/// Single-channel image with row-major intensities normalized to [0,1].
/// Immutable after construction.
class GrayImage {
 public:
  struct Unchecked {};

  /// Throws Errc::ZeroDimension for an empty extent and Errc::InvalidArgument
  /// when the data length mismatches or an intensity leaves [0,1].
  GrayImage(std::size_t width, std::size_t height, std::vector<double> data);

  // Producers that already guarantee the invariants (pixel ops) skip the scan.
  GrayImage(std::size_t width, std::size_t height, std::vector<double> data, Unchecked) noexcept
      : width_(width), height_(height), data_(std::move(data)) {}

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t size() const noexcept { return data_.size(); }
  std::span<const double> pixels() const noexcept { return data_; }
  double at(std::size_t x, std::size_t y) const noexcept { return data_[y * width_ + x]; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::vector<double> data_;
};

}  // namespace mdm
