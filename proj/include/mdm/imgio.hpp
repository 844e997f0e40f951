#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mdm/image.hpp"

namespace mdm {

/// Decodes PGM (P2/P5, maxval 255) or PNG (8-bit gray or RGB). RGB is reduced
/// with BT.601 luma weights; level L maps to L/255.
GrayImage load_gray(const std::filesystem::path& path);

/// Writes binary PGM; each intensity is quantized to round(x*255).
void save_pgm(const GrayImage& img, const std::filesystem::path& path);

enum class DistortionKind { GammaTransfer, MeanShift, Other };

struct Distortion {
  DistortionKind kind = DistortionKind::Other;
  std::string tag;  // only meaningful for Other

  static Distortion gamma() { return {DistortionKind::GammaTransfer, {}}; }
  static Distortion mean_shift() { return {DistortionKind::MeanShift, {}}; }
  static Distortion other(std::string t) { return {DistortionKind::Other, std::move(t)}; }

  /// "gamma", "meanshift" or "other:<tag>"
  std::string label() const;
  static std::optional<Distortion> parse(std::string_view text);

  bool operator==(const Distortion&) const = default;
};

struct DatasetRecord {
  std::string image_path;
  double mos = 0.0;
  Distortion distortion;
  std::string content_id;
  std::optional<double> severity;

  bool operator==(const DatasetRecord&) const = default;
};

struct DatasetManifest {
  std::vector<DatasetRecord> records;
  // Directory relative image paths are resolved against.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const DatasetRecord& r) const;
  std::size_t distinct_contents() const;
};

/// CSV with header `path,mos,distortion,content_id[,severity]` (columns are
/// located by name). BadNumber rows are 1-based data-row indices.
DatasetManifest parse_manifest(const std::filesystem::path& path);
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

}  // namespace mdm
