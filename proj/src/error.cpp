#include "mdm/error.hpp"

namespace mdm {

std::string_view to_string(Errc code) noexcept {
  switch (code) {
    case Errc::InvalidArgument: return "InvalidArgument";
    case Errc::IoError: return "IoError";
    case Errc::UnsupportedFormat: return "UnsupportedFormat";
    case Errc::CorruptFile: return "CorruptFile";
    case Errc::ZeroDimension: return "ZeroDimension";
    case Errc::MissingColumn: return "MissingColumn";
    case Errc::BadNumber: return "BadNumber";
    case Errc::EmptyManifest: return "EmptyManifest";
    case Errc::TooFewContents: return "TooFewContents";
    case Errc::DegenerateOutput: return "DegenerateOutput";
    case Errc::DegenerateInput: return "DegenerateInput";
    case Errc::TooFewSamples: return "TooFewSamples";
    case Errc::SingleClass: return "SingleClass";
    case Errc::TaskMismatch: return "TaskMismatch";
    case Errc::SchemaVersionMismatch: return "SchemaVersionMismatch";
    case Errc::CorruptModel: return "CorruptModel";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::BadSizeSpec: return "BadSizeSpec";
  }
  return "Unknown";
}

namespace {

std::string decorate(Errc code, const std::string& message, std::optional<std::size_t> row) {
  std::string out(to_string(code));
  if (row) out += " (row " + std::to_string(*row) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}

}  // namespace

Error::Error(Errc code, const std::string& message, std::optional<std::size_t> row)
    : std::runtime_error(decorate(code, message, row)), code_(code), row_(row) {}

}  // namespace mdm
