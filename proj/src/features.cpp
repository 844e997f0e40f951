#include "mdm/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "mdm/error.hpp"
#include "mdm/pixelops.hpp"

namespace mdm {

namespace {

// Shared tail of the deviation: `values` already hold the (transformed) samples.
double deviation_about_mean(std::span<const double> values, unsigned rho) {
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  double lo = values[0];
  double hi = values[0];
  for (double v : values) {
    sum += v;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  // A rounded mean of equal values can sit an ulp off them.
  if (lo == hi) return 0.0;
  const double mean = std::clamp(sum / n, lo, hi);
  const double d_max = std::max(hi - mean, mean - lo);

  const double inv = 1.0 / d_max;
  double acc = 0.0;
  for (double v : values) acc += fast_pow(std::abs(v - mean) * inv, rho);
  return d_max * std::pow(acc / n, 1.0 / static_cast<double>(rho));
}

enum class Source { Direct, Complement };

// Power-law transform fused with the optional complement; writes into scratch.
double mdm_of(std::span<const double> pixels, Source src, const MdmParams& p,
              std::vector<double>& scratch) {
  const auto q = static_cast<unsigned>(p.q);
  scratch.resize(pixels.size());
  if (src == Source::Direct) {
    std::transform(pixels.begin(), pixels.end(), scratch.begin(),
                   [q](double x) { return fast_pow(x, q); });
  } else {
    std::transform(pixels.begin(), pixels.end(), scratch.begin(),
                   [q](double x) { return fast_pow(1.0 - x, q); });
  }
  const double dev = deviation_about_mean(scratch, static_cast<unsigned>(p.rho));
  return std::sqrt(std::sqrt(dev));
}

}  // namespace

void MdmParams::validate() const {
  if (rho < 1) throw Error(Errc::InvalidArgument, "rho must be >= 1");
  if (q < 1) throw Error(Errc::InvalidArgument, "q must be >= 1");
}

double minkowski_deviation(std::span<const double> values, int rho) {
  if (rho < 1) throw Error(Errc::InvalidArgument, "rho must be >= 1");
  if (values.empty()) throw Error(Errc::InvalidArgument, "deviation of an empty sample");
  return deviation_about_mean(values, static_cast<unsigned>(rho));
}

double minkowski_deviation(const GrayImage& img, int rho) {
  return minkowski_deviation(img.pixels(), rho);
}

double mdm_feature(const GrayImage& img, const MdmParams& p) {
  p.validate();
  std::vector<double> scratch;
  return mdm_of(img.pixels(), Source::Direct, p, scratch);
}

double entropy(const GrayImage& img) {
  // Block means of 8-bit data land exactly on .5 levels; the nudge absorbs the
  // representation error so those ties round up as round-half-away requires.
  constexpr double kTieNudge = 1e-9;
  std::array<std::size_t, 256> hist{};
  for (double x : img.pixels()) {
    ++hist[std::min<std::size_t>(255, static_cast<std::size_t>(x * 255.0 + (0.5 + kTieNudge)))];
  }
  const double n = static_cast<double>(img.size());
  double h = 0.0;
  for (std::size_t count : hist) {
    if (count == 0) continue;
    const double p = static_cast<double>(count) / n;
    h -= p * std::log2(p);
  }
  // -0.0 for a single occupied bin.
  return h == 0.0 ? 0.0 : h;
}

FeatureVector extract(const GrayImage& img, const MdmParams& p, bool use_downsample) {
  p.validate();
  if (use_downsample) {
    GrayImage reduced = downsample(img, downsample_factor(img.height(), img.width()));
    return extract(reduced, p, false);
  }
  std::vector<double> scratch;
  FeatureVector f;
  f.mdm_d = mdm_of(img.pixels(), Source::Direct, p, scratch);
  f.mdm_dc = mdm_of(img.pixels(), Source::Complement, p, scratch);
  f.entropy_bits = entropy(img);
  return f;
}

}  // namespace mdm
