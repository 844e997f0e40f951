#pragma once

#include <array>
#include <span>

#include "mdm/image.hpp"

namespace mdm {

/// Minkowski order and power-law exponent of the metric.
struct MdmParams {
  int rho = 64;
  int q = 8;

  /// Throws Errc::InvalidArgument unless both are >= 1.
  void validate() const;
  bool operator==(const MdmParams&) const = default;
};

struct FeatureVector {
  double mdm_d = 0.0;         // metric on the image
  double mdm_dc = 0.0;        // metric on its complement
  double entropy_bits = 0.0;  // 256-bin histogram entropy

  std::array<double, 3> as_array() const { return {mdm_d, mdm_dc, entropy_bits}; }
  bool operator==(const FeatureVector&) const = default;
};

/// ((1/N) sum |x_i - mean|^rho)^(1/rho).
///
/// Evaluated as d_max * (mean((|x_i - mean| / d_max)^rho))^(1/rho) with
/// d_max = max |x_i - mean|, which keeps every summand in [0,1] so high
/// orders neither underflow nor overflow. A constant input yields 0.
double minkowski_deviation(std::span<const double> values, int rho);
double minkowski_deviation(const GrayImage& img, int rho);

/// Fourth root of the order-rho deviation of the power-law transformed image.
double mdm_feature(const GrayImage& img, const MdmParams& p);

/// Shannon entropy in bits over levels round(x * 255).
double entropy(const GrayImage& img);

/// The full feature vector. With `use_downsample` the image is first reduced by
/// downsample_factor(h, w) and all three features see the reduced pixels.
FeatureVector extract(const GrayImage& img, const MdmParams& p, bool use_downsample);

}  // namespace mdm
