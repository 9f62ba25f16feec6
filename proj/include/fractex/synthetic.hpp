#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fractex/imageio.hpp"

// Seeded synthetic textures for benchmarks and demos.
namespace fractex::synthetic {

enum class Pattern { Constant, Checker2, Checker8, Noise };

std::string to_string(Pattern p);
const std::vector<Pattern>& all_patterns();

/// One sample of `pattern`: a random global offset (up to +-10 levels), a
/// random checker phase and +-2 levels of per-pixel jitter, all drawn from
/// `seed`. Noise samples are uniform over 0..255.
imageio::GrayImage make_texture(Pattern pattern, int size, std::uint64_t seed);

struct LabeledImage {
  imageio::GrayImage image;
  std::string label;
};

/// `per_class` samples of every pattern, class-major order.
std::vector<LabeledImage> make_dataset(int per_class, int size, std::uint64_t seed);

}  // namespace fractex::synthetic
