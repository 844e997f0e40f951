#include "mdm/pixelops.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "mdm/error.hpp"

namespace mdm {

DownsampleFactor::DownsampleFactor(int m) : m_(m) {
  if (m < 2) throw Error(Errc::InvalidArgument, "downsample factor must be >= 2");
}

DownsampleFactor downsample_factor(std::size_t height, std::size_t width) {
  const double shorter = static_cast<double>(std::min(height, width));
  const long rounded = std::lround(shorter / 512.0);
  return DownsampleFactor(static_cast<int>(std::max(2L, rounded)));
}

GrayImage downsample(const GrayImage& img, DownsampleFactor factor) {
  const std::size_t m = static_cast<std::size_t>(factor.value());
  const std::size_t ow = img.width() / m;
  const std::size_t oh = img.height() / m;
  if (ow == 0 || oh == 0) {
    throw Error(Errc::DegenerateOutput, std::to_string(img.width()) + "x" +
                                            std::to_string(img.height()) +
                                            " image is smaller than one " + std::to_string(m) +
                                            "x" + std::to_string(m) + " block");
  }
  const double area = static_cast<double>(m * m);
  const auto src = img.pixels();
  std::vector<double> out(ow * oh);
  std::vector<double> acc(ow);
  for (std::size_t oy = 0; oy < oh; ++oy) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t dy = 0; dy < m; ++dy) {
      const double* row = src.data() + (oy * m + dy) * img.width();
      for (std::size_t ox = 0; ox < ow; ++ox) {
        const double* block = row + ox * m;
        double s = 0.0;
        for (std::size_t dx = 0; dx < m; ++dx) s += block[dx];
        acc[ox] += s;
      }
    }
    double* dst = out.data() + oy * ow;
    // Division (not multiply by reciprocal) keeps a block of ones exactly 1.
    for (std::size_t ox = 0; ox < ow; ++ox) dst[ox] = acc[ox] / area;
  }
  return GrayImage(ow, oh, std::move(out), GrayImage::Unchecked{});
}

GrayImage complement(const GrayImage& img) {
  std::vector<double> out(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [](double v) { return 1.0 - v; });
  return GrayImage(img.width(), img.height(), std::move(out), GrayImage::Unchecked{});
}

GrayImage power_law(const GrayImage& img, int q) {
  if (q < 1) throw Error(Errc::InvalidArgument, "power-law exponent must be >= 1");
  const auto k = static_cast<unsigned>(q);
  std::vector<double> out(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), out.begin(),
                 [k](double v) { return fast_pow(v, k); });
  return GrayImage(img.width(), img.height(), std::move(out), GrayImage::Unchecked{});
}

}  // namespace mdm
