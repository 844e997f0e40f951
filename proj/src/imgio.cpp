#include "mdm/imgio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <set>
#include <span>
#include <sstream>

#include "mdm/error.hpp"
#include "mdm/text.hpp"

namespace mdm {

namespace {

using Bytes = std::vector<unsigned char>;

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), {});
}

double luma(unsigned r, unsigned g, unsigned b) {
  // BT.601; the weights sum to one up to rounding, so clamp the top end.
  return std::min(1.0, (0.299 * r + 0.587 * g + 0.114 * b) / 255.0);
}

// ---- PGM ------------------------------------------------------------------

class PnmHeaderReader {
 public:
  explicit PnmHeaderReader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  // Reads one whitespace-delimited unsigned integer, skipping '#' comments.
  std::uint64_t next_uint() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw Error(Errc::CorruptFile, "malformed PGM header or sample");
    }
    std::uint64_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_++] - '0');
      if (v > (1ull << 32)) throw Error(Errc::CorruptFile, "PGM value overflow");
    }
    return v;
  }

  // After maxval exactly one whitespace byte separates header and raster.
  std::size_t raster_offset() {
    if (pos_ >= bytes_.size()) throw Error(Errc::CorruptFile, "PGM truncated after header");
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      unsigned char c = bytes_[pos_];
      if (c == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(c)) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 2;
};

GrayImage decode_pgm(std::span<const unsigned char> bytes) {
  const bool binary = bytes[1] == '5';
  PnmHeaderReader reader(bytes);
  auto width = reader.next_uint();
  auto height = reader.next_uint();
  auto maxval = reader.next_uint();
  if (width == 0 || height == 0) throw Error(Errc::ZeroDimension, "PGM with zero extent");
  if (maxval != 255) {
    throw Error(Errc::UnsupportedFormat, "PGM maxval " + std::to_string(maxval) + " (only 255)");
  }
  if (width * height > (1ull << 31)) throw Error(Errc::UnsupportedFormat, "PGM too large");
  const std::size_t n = width * height;
  std::vector<double> data(n);
  if (binary) {
    std::size_t off = reader.raster_offset();
    if (bytes.size() < off + n) throw Error(Errc::CorruptFile, "PGM raster truncated");
    for (std::size_t i = 0; i < n; ++i) data[i] = bytes[off + i] / 255.0;
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      auto level = reader.next_uint();
      if (level > 255) throw Error(Errc::CorruptFile, "PGM sample above maxval");
      data[i] = static_cast<double>(level) / 255.0;
    }
  }
  return GrayImage(width, height, std::move(data), GrayImage::Unchecked{});
}

// ---- PNG ------------------------------------------------------------------

constexpr unsigned char kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

struct MemorySource {
  std::span<const unsigned char> bytes;
  std::size_t pos = 0;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<MemorySource*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes.size()) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, src->bytes.data() + src->pos, len);
  src->pos += len;
}

void silent_warning(png_structp, png_const_charp) {}

std::uint32_t be32(const unsigned char* p) {
  return (std::uint32_t{p[0]} << 24) | (std::uint32_t{p[1]} << 16) | (std::uint32_t{p[2]} << 8) |
         std::uint32_t{p[3]};
}

// Only libpng calls live in this frame, so nothing can be clobbered by its longjmp.
void read_png_raster(std::span<const unsigned char> bytes, std::size_t stride,
                     std::vector<unsigned char>& raster) {
  const std::size_t height = raster.size() / stride;
  std::vector<png_bytep> rows(height);
  for (std::size_t y = 0; y < height; ++y) rows[y] = raster.data() + y * stride;
  MemorySource source{bytes};

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, silent_warning);
  if (!png) throw Error(Errc::IoError, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(Errc::IoError, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw Error(Errc::CorruptFile, "PNG decode failed");
  }
  png_set_read_fn(png, &source, read_from_memory);
  png_read_info(png, info);
  png_set_interlace_handling(png);
  png_read_update_info(png, info);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
}

GrayImage decode_png(std::span<const unsigned char> bytes) {
  // IHDR sits at a fixed offset; inspect it before handing the stream to libpng
  // so every unsupported layout is rejected up front.
  if (bytes.size() < 33 || std::memcmp(bytes.data() + 12, "IHDR", 4) != 0) {
    throw Error(Errc::CorruptFile, "PNG without IHDR");
  }
  const std::uint32_t width = be32(bytes.data() + 16);
  const std::uint32_t height = be32(bytes.data() + 20);
  const int bit_depth = bytes[24];
  const int color_type = bytes[25];
  if (width == 0 || height == 0) throw Error(Errc::ZeroDimension, "PNG with zero extent");
  if (bit_depth != 8) {
    throw Error(Errc::UnsupportedFormat, "PNG bit depth " + std::to_string(bit_depth) + " (only 8)");
  }
  int channels = 0;
  if (color_type == PNG_COLOR_TYPE_GRAY) {
    channels = 1;
  } else if (color_type == PNG_COLOR_TYPE_RGB) {
    channels = 3;
  } else {
    throw Error(Errc::UnsupportedFormat, "PNG color type " + std::to_string(color_type) +
                                             " (only gray or RGB)");
  }
  if (static_cast<std::uint64_t>(width) * height > (1ull << 31)) {
    throw Error(Errc::UnsupportedFormat, "PNG too large");
  }

  std::vector<unsigned char> raster(static_cast<std::size_t>(width) * channels * height);
  read_png_raster(bytes, width * channels, raster);

  std::vector<double> data(static_cast<std::size_t>(width) * height);
  if (channels == 1) {
    std::transform(raster.begin(), raster.end(), data.begin(),
                   [](unsigned char v) { return v / 255.0; });
  } else {
    for (std::size_t i = 0; i < data.size(); ++i) {
      const unsigned char* px = raster.data() + 3 * i;
      data[i] = luma(px[0], px[1], px[2]);
    }
  }
  return GrayImage(width, height, std::move(data), GrayImage::Unchecked{});
}

}  // namespace

GrayImage load_gray(const std::filesystem::path& path) {
  Bytes bytes = read_file(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '2' || bytes[1] == '5')) {
    return decode_pgm(bytes);
  }
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSignature, 8) == 0) {
    return decode_png(bytes);
  }
  throw Error(Errc::UnsupportedFormat, path.string() + " is neither PGM (P2/P5) nor PNG");
}

void save_pgm(const GrayImage& img, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> raster(img.size());
  std::transform(img.pixels().begin(), img.pixels().end(), raster.begin(),
                 [](double v) { return static_cast<unsigned char>(std::lround(v * 255.0)); });
  out.write(reinterpret_cast<const char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (!out) throw Error(Errc::IoError, "short write to " + path.string());
}

// ---- manifest -------------------------------------------------------------

std::string Distortion::label() const {
  switch (kind) {
    case DistortionKind::GammaTransfer: return "gamma";
    case DistortionKind::MeanShift: return "meanshift";
    case DistortionKind::Other: return "other:" + tag;
  }
  return {};
}

std::optional<Distortion> Distortion::parse(std::string_view text) {
  text = trim(text);
  if (text == "gamma") return gamma();
  if (text == "meanshift") return mean_shift();
  if (text.starts_with("other:") && text.size() > 6) return other(std::string(text.substr(6)));
  return std::nullopt;
}

std::filesystem::path DatasetManifest::resolve(const DatasetRecord& r) const {
  std::filesystem::path p(r.image_path);
  return p.is_absolute() ? p : base_dir / p;
}

std::size_t DatasetManifest::distinct_contents() const {
  std::set<std::string_view> ids;
  for (const auto& r : records) ids.insert(r.content_id);
  return ids.size();
}

DatasetManifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::IoError, "cannot open " + path.string());

  std::string line;
  bool have_header = false;
  while (!have_header && std::getline(in, line)) {
    if (!trim(line).empty()) have_header = true;
  }
  if (!have_header) throw Error(Errc::EmptyManifest, path.string() + " is empty");
  if (line.starts_with("\xEF\xBB\xBF")) line.erase(0, 3);

  auto header = split(trim(line), ',');
  auto column = [&](std::string_view name, bool required) -> std::optional<std::size_t> {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (trim(header[i]) == name) return i;
    }
    if (required) throw Error(Errc::MissingColumn, "manifest lacks column '" + std::string(name) + "'");
    return std::nullopt;
  };
  const std::size_t c_path = *column("path", true);
  const std::size_t c_mos = *column("mos", true);
  const std::size_t c_dist = *column("distortion", true);
  const std::size_t c_content = *column("content_id", true);
  const auto c_severity = column("severity", false);

  DatasetManifest manifest;
  manifest.base_dir = path.parent_path();
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    auto fields = split(trim(line), ',');
    if (fields.size() != header.size()) {
      throw Error(Errc::CorruptFile,
                  "expected " + std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()),
                  row);
    }
    DatasetRecord rec;
    rec.image_path = std::string(trim(fields[c_path]));
    auto mos = parse_real(fields[c_mos]);
    if (!mos) throw Error(Errc::BadNumber, "mos '" + fields[c_mos] + "'", row);
    rec.mos = *mos;
    auto dist = Distortion::parse(fields[c_dist]);
    if (!dist) throw Error(Errc::InvalidArgument, "distortion '" + fields[c_dist] + "'", row);
    rec.distortion = std::move(*dist);
    rec.content_id = std::string(trim(fields[c_content]));
    if (rec.content_id.empty()) throw Error(Errc::InvalidArgument, "empty content_id", row);
    if (rec.image_path.empty()) throw Error(Errc::InvalidArgument, "empty path", row);
    if (c_severity && !trim(fields[*c_severity]).empty()) {
      auto sev = parse_real(fields[*c_severity]);
      if (!sev) throw Error(Errc::BadNumber, "severity '" + fields[*c_severity] + "'", row);
      rec.severity = *sev;
    }
    manifest.records.push_back(std::move(rec));
  }
  if (manifest.records.empty()) throw Error(Errc::EmptyManifest, path.string() + " has no data rows");
  return manifest;
}

void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  const bool with_severity = std::any_of(manifest.records.begin(), manifest.records.end(),
                                         [](const DatasetRecord& r) { return r.severity.has_value(); });
  std::ostringstream out;
  out << "path,mos,distortion,content_id" << (with_severity ? ",severity" : "") << '\n';
  for (const auto& r : manifest.records) {
    out << r.image_path << ',' << format_real(r.mos) << ',' << r.distortion.label() << ','
        << r.content_id;
    if (with_severity) out << ',' << (r.severity ? format_real(*r.severity) : std::string());
    out << '\n';
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error(Errc::IoError, "cannot write " + path.string());
  file << out.str();
  if (!file) throw Error(Errc::IoError, "short write to " + path.string());
}

}  // namespace mdm
