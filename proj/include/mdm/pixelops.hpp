#pragma once

#include <bit>
#include <cstddef>

#include "mdm/image.hpp"

namespace mdm {

/// Block size for downsampling; always at least 2.
class DownsampleFactor {
 public:
  /// Throws Errc::InvalidArgument for m < 2.
  explicit DownsampleFactor(int m);
  int value() const noexcept { return m_; }
  bool operator==(const DownsampleFactor&) const = default;

 private:
  int m_;
};

/// max(2, round(min(h, w) / 512)), rounding half away from zero.
DownsampleFactor downsample_factor(std::size_t height, std::size_t width);

/// m x m block means; rows/columns that do not fill a whole block are dropped.
/// Throws Errc::DegenerateOutput when the result would be empty.
GrayImage downsample(const GrayImage& img, DownsampleFactor m);

/// x -> 1 - x, the normalized form of 255 - L.
GrayImage complement(const GrayImage& img);

/// x^k by left-to-right square-and-multiply: floor(log2 k) squarings and
/// popcount(k) - 1 multiplies. k must be >= 1.
template <class T>
constexpr T fast_pow(T x, unsigned k) {
  T result = x;
  for (int bit = std::bit_width(k) - 2; bit >= 0; --bit) {
    result = result * result;
    if ((k >> bit) & 1u) result = result * x;
  }
  return result;
}

/// Pixel-wise x^q. Throws Errc::InvalidArgument for q < 1.
GrayImage power_law(const GrayImage& img, int q);

}  // namespace mdm
