#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace mdm {

enum class Errc {
  InvalidArgument,
  IoError,
  UnsupportedFormat,
  CorruptFile,
  ZeroDimension,
  MissingColumn,
  BadNumber,
  EmptyManifest,
  TooFewContents,
  DegenerateOutput,
  DegenerateInput,
  TooFewSamples,
  SingleClass,
  TaskMismatch,
  SchemaVersionMismatch,
  CorruptModel,
  ZeroVariance,
  BadSizeSpec,
};

std::string_view to_string(Errc code) noexcept;

/// Every failure in the library is reported as an Error carrying a code.
/// Manifest parsing also records the 1-based data row that failed.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& message, std::optional<std::size_t> row = std::nullopt);

  Errc code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }

 private:
  Errc code_;
  std::optional<std::size_t> row_;
};

}  // namespace mdm
