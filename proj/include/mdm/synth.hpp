#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "mdm/image.hpp"
#include "mdm/imgio.hpp"

namespace mdm {

struct DistortionSpec {
  DistortionKind kind = DistortionKind::GammaTransfer;
  double param = 1.0;  // exponent g for gamma, offset delta for mean shift

  static DistortionSpec gamma(double g);
  static DistortionSpec mean_shift(double delta);
  /// |ln g| or |delta|
  double severity() const;
};

/// Gamma: x -> x^g. Mean shift: x -> clamp(x + delta, 0, 1).
GrayImage apply_distortion(const GrayImage& img, const DistortionSpec& spec);

/// Strictly decreasing map from severity to [1, 9]: 1 + 8 / (1 + s).
double pseudo_mos(double severity);

/// Smooth mid-gray scene (low-frequency waves, a gradient and fine texture);
/// every seed gives a different content.
GrayImage procedural_source(std::uint64_t seed, std::size_t width, std::size_t height);

struct SourceImage {
  std::string content_id;
  GrayImage image;
};

struct KindLevels {
  DistortionKind kind = DistortionKind::GammaTransfer;
  std::vector<double> levels;  // severities
};

/// Writes `content_<id>_<kind>_<level>.pgm` for every source, kind and level
/// index plus `manifest.csv` into out_dir. The direction of each distortion
/// (darken/brighten) is drawn from the seed per entry.
DatasetManifest make_dataset(std::span<const SourceImage> sources, std::span<const KindLevels> plan,
                             std::uint64_t seed, const std::filesystem::path& out_dir, int jobs = 1);
/// Same severity levels for every kind.
DatasetManifest make_dataset(std::span<const SourceImage> sources, std::span<const DistortionKind> kinds,
                             std::span<const double> levels, std::uint64_t seed, const std::filesystem::path& out_dir,
                             int jobs = 1);

struct SynthOptions {
  std::size_t contents = 20;
  std::size_t width = 128;
  std::size_t height = 128;
  // Gamma moves the features far less than a mean shift of equal severity.
  std::vector<double> gamma_levels{0.2, 0.4, 0.6, 0.8, 1.0};
  std::vector<double> shift_levels{0.04, 0.08, 0.12, 0.16, 0.2};
  std::uint64_t seed = 0;
  int jobs = 1;
};

/// procedural_source for each content, then make_dataset with gamma and mean shift.
DatasetManifest make_synthetic_dataset(const SynthOptions& options, const std::filesystem::path& out_dir);

}  // namespace mdm
