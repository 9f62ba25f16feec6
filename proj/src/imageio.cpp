#include "fractex/imageio.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstring>
#include <fstream>
#include <set>
#include <unordered_map>

#include "fractex/csv.hpp"
#include "fractex/error.hpp"

namespace fractex::imageio {

GrayImage::GrayImage(int width, int height, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), pixels_(std::move(pixels)) {
  if (width < 1 || height < 1) throw ValidationError("image dimensions must be >= 1");
  if (pixels_.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
    throw ValidationError("pixel count does not match width x height");
  }
}

GrayImage::GrayImage(int width, int height, std::uint8_t fill)
    : GrayImage(width, height,
                std::vector<std::uint8_t>(static_cast<std::size_t>(std::max(width, 0)) *
                                              static_cast<std::size_t>(std::max(height, 0)),
                                          fill)) {}

namespace {

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open image " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

// PNM header tokenizer: whitespace separated, '#' comments to end of line.
class PnmReader {
 public:
  explicit PnmReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    skip_space_and_comments();
    std::string tok;
    while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_]) && bytes_[pos_] != '#') {
      tok.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (tok.empty()) throw FormatError("truncated PGM header");
    return tok;
  }

  long number() {
    const std::string tok = token();
    if (!std::all_of(tok.begin(), tok.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
      throw FormatError("invalid PGM number '" + tok + "'");
    }
    return std::stol(tok);
  }

  // A single whitespace byte separates the header from binary raster data.
  void skip_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("malformed PGM header terminator");
    }
    ++pos_;
  }

  std::span<const std::uint8_t> rest() const { return bytes_.subspan(pos_); }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

struct PngMemory {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
};

void png_read_memory(png_structp png, png_bytep out, png_size_t len) {
  auto* src = static_cast<PngMemory*>(png_get_io_ptr(png));
  if (src->pos + len > src->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, src->bytes.data() + src->pos, len);
  src->pos += len;
}

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* buf = static_cast<std::string*>(png_get_error_ptr(png));
  if (buf) *buf = msg;
  png_longjmp(png, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

std::string png_color_name(int color_type) {
  switch (color_type) {
    case PNG_COLOR_TYPE_GRAY: return "gray";
    case PNG_COLOR_TYPE_RGB: return "RGB";
    case PNG_COLOR_TYPE_PALETTE: return "palette";
    case PNG_COLOR_TYPE_GRAY_ALPHA: return "gray+alpha";
    case PNG_COLOR_TYPE_RGB_ALPHA: return "RGBA";
    default: return "unknown";
  }
}

GrayImage decode_png(std::span<const std::uint8_t> bytes) {
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_handler,
                                           png_warning_handler);
  if (!png) throw Error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error("png_create_info_struct failed");
  }

  PngMemory src{bytes, 0};
  // Everything that could longjmp lives below; no C++ objects with
  // non-trivial destructors are created between setjmp and the jump.
  std::vector<std::uint8_t> raster;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, color_type = 0;
  volatile bool unsupported = false;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG: " + err);
  }
  png_set_read_fn(png, &src, png_read_memory);
  png_read_info(png, info);
  png_get_IHDR(png, info, &width, &height, &bit_depth, &color_type, nullptr, nullptr, nullptr);
  if (bit_depth != 8 || (color_type != PNG_COLOR_TYPE_GRAY && color_type != PNG_COLOR_TYPE_RGB)) {
    unsupported = true;
  } else {
    const std::size_t channels = color_type == PNG_COLOR_TYPE_RGB ? 3 : 1;
    raster.resize(static_cast<std::size_t>(width) * height * channels);
    rows.resize(height);
    for (png_uint_32 y = 0; y < height; ++y) rows[y] = raster.data() + y * width * channels;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (unsupported) {
    throw FormatError("unsupported PNG format: " + std::to_string(bit_depth) + "-bit " +
                      png_color_name(color_type) + " (need 8-bit gray or RGB)");
  }
  if (color_type == PNG_COLOR_TYPE_GRAY) {
    return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(raster));
  }
  std::vector<std::uint8_t> gray(static_cast<std::size_t>(width) * height);
  for (std::size_t i = 0; i < gray.size(); ++i) {
    gray[i] = luma(raster[3 * i], raster[3 * i + 1], raster[3 * i + 2]);
  }
  return GrayImage(static_cast<int>(width), static_cast<int>(height), std::move(gray));
}

}  // namespace

GrayImage decode_pgm(std::span<const std::uint8_t> bytes) {
  PnmReader rd(bytes);
  const std::string magic = rd.token();
  if (magic != "P2" && magic != "P5") throw FormatError("unsupported PNM variant " + magic);
  const long w = rd.number();
  const long h = rd.number();
  const long maxval = rd.number();
  if (w < 1 || h < 1) throw FormatError("PGM dimensions must be positive");
  if (maxval < 1 || maxval > 255) {
    throw FormatError("unsupported PGM bit depth (maxval " + std::to_string(maxval) + ")");
  }
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  std::vector<std::uint8_t> px(n);
  if (magic == "P5") {
    rd.skip_single_space();
    auto data = rd.rest();
    if (data.size() < n) throw FormatError("truncated PGM raster");
    std::copy_n(data.begin(), n, px.begin());
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const long v = rd.number();
      if (v > maxval) throw FormatError("PGM sample exceeds maxval");
      px[i] = static_cast<std::uint8_t>(v);
    }
  }
  for (auto v : px) {
    if (v > maxval) throw FormatError("PGM sample exceeds maxval");
  }
  return GrayImage(static_cast<int>(w), static_cast<int>(h), std::move(px));
}

GrayImage load_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  static constexpr std::uint8_t kPngMagic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P') {
    return decode_pgm(bytes);
  }
  throw FormatError("unrecognized image format in " + path.string());
}

void write_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::string out = "P5\n" + std::to_string(img.width()) + " " + std::to_string(img.height()) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(img.pixels().data()), img.pixels().size());
  csv::write_file_atomic(path, out);
}

std::filesystem::path DatasetManifest::resolve(const ManifestEntry& e) const {
  std::filesystem::path p(e.path);
  return p.is_absolute() ? p : base_dir / p;
}

std::size_t DatasetManifest::class_index(const std::string& label) const {
  auto it = std::find(classes.begin(), classes.end(), label);
  if (it == classes.end()) throw ValidationError("unknown class label '" + label + "'");
  return static_cast<std::size_t>(it - classes.begin());
}

DatasetManifest make_manifest(std::vector<ManifestEntry> entries,
                              std::filesystem::path base_dir) {
  if (entries.empty()) throw ValidationError("manifest has no entries");
  DatasetManifest m;
  m.base_dir = std::move(base_dir);
  std::set<std::string> seen;
  std::unordered_map<std::string, std::size_t> counts;
  for (const auto& e : entries) {
    if (!seen.insert(e.path).second) throw ValidationError("duplicate path in manifest: " + e.path);
    if (counts[e.label]++ == 0) m.classes.push_back(e.label);
  }
  for (const auto& c : m.classes) {
    if (counts[c] < 2) {
      throw ValidationError("class '" + c + "' has a single sample; at least 2 are required");
    }
  }
  m.entries = std::move(entries);
  return m;
}

DatasetManifest parse_manifest(const std::string& text, std::filesystem::path base_dir) {
  const auto lines = csv::split_lines(text);
  std::size_t lineno = 0;
  std::size_t path_col = 0, label_col = 0;
  bool have_header = false;
  std::vector<ManifestEntry> entries;
  for (const auto& line : lines) {
    ++lineno;
    if (line.empty()) continue;
    auto fields = csv::split_record(line, lineno);
    if (!have_header) {
      auto find = [&](const char* name) -> std::size_t {
        auto it = std::find(fields.begin(), fields.end(), name);
        if (it == fields.end()) {
          throw ParseError(std::string("manifest header lacks '") + name + "' column", lineno);
        }
        return static_cast<std::size_t>(it - fields.begin());
      };
      path_col = find("path");
      label_col = find("label");
      have_header = true;
      continue;
    }
    const std::size_t need = std::max(path_col, label_col) + 1;
    if (fields.size() < need) throw ParseError("missing column", lineno);
    if (fields[path_col].empty() || fields[label_col].empty()) {
      throw ParseError("empty path or label", lineno);
    }
    entries.push_back({fields[path_col], fields[label_col]});
  }
  if (!have_header) throw ParseError("missing header 'path,label'", 1);
  return make_manifest(std::move(entries), std::move(base_dir));
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(csv::read_file(path), path.parent_path());
}

void write_manifest(const std::filesystem::path& path, const DatasetManifest& manifest) {
  std::string out = "path,label\n";
  for (const auto& e : manifest.entries) {
    out += csv::quote(e.path) + "," + csv::quote(e.label) + "\n";
  }
  csv::write_file_atomic(path, out);
}

}  // namespace fractex::imageio
