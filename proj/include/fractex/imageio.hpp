#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fractex::imageio {

/// Row-major 8-bit grayscale raster.
class GrayImage {
 public:
  GrayImage(int width, int height, std::vector<std::uint8_t> pixels);
  GrayImage(int width, int height, std::uint8_t fill);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }

  std::uint8_t at(int x, int y) const { return pixels_[index(x, y)]; }
  void set(int x, int y, std::uint8_t v) { pixels_[index(x, y)] = v; }

  bool operator==(const GrayImage&) const = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) +
           static_cast<std::size_t>(x);
  }

  int width_;
  int height_;
  std::vector<std::uint8_t> pixels_;
};

/// floor(0.299 R + 0.587 G + 0.114 B), computed in integers.
constexpr std::uint8_t luma(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((299u * r + 587u * g + 114u * b) / 1000u);
}

/// Decodes an 8-bit gray/RGB PNG or a P2/P5 PGM. The format is detected
/// from the file's magic bytes, not its extension.
GrayImage load_image(const std::filesystem::path& path);

GrayImage decode_pgm(std::span<const std::uint8_t> bytes);

/// Writes binary PGM (P5).
void write_pgm(const std::filesystem::path& path, const GrayImage& img);

struct ManifestEntry {
  std::string path;
  std::string label;

  bool operator==(const ManifestEntry&) const = default;
};

struct DatasetManifest {
  std::vector<ManifestEntry> entries;
  std::vector<std::string> classes;  // first-appearance order
  std::filesystem::path base_dir;    // entry paths are relative to this

  std::filesystem::path resolve(const ManifestEntry& e) const;
  std::size_t class_index(const std::string& label) const;
};

/// Builds a manifest from entries and enforces its invariants (unique
/// paths, non-empty, every class with at least two entries).
DatasetManifest make_manifest(std::vector<ManifestEntry> entries,
                              std::filesystem::path base_dir = {});

DatasetManifest load_manifest(const std::filesystem::path& path);
DatasetManifest parse_manifest(const std::string& text,
                               std::filesystem::path base_dir = {});
void write_manifest(const std::filesystem::path& path,
                    const DatasetManifest& manifest);

}  // namespace fractex::imageio
