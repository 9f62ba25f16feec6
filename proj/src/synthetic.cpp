#include "fractex/synthetic.hpp"

#include <algorithm>
#include <random>

#include "fractex/classify.hpp"

namespace fractex::synthetic {

std::string to_string(Pattern p) {
  switch (p) {
    case Pattern::Constant: return "constant";
    case Pattern::Checker2: return "checker2";
    case Pattern::Checker8: return "checker8";
    case Pattern::Noise: return "noise";
  }
  return "constant";
}

const std::vector<Pattern>& all_patterns() {
  static const std::vector<Pattern> p{Pattern::Constant, Pattern::Checker2, Pattern::Checker8,
                                      Pattern::Noise};
  return p;
}

imageio::GrayImage make_texture(Pattern pattern, int size, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto draw = [&](int lo, int hi) {
    return lo + static_cast<int>(classify::uniform_index(rng, static_cast<std::uint64_t>(hi - lo + 1)));
  };
  imageio::GrayImage img(size, size, std::uint8_t{0});
  if (pattern == Pattern::Noise) {
    for (int y = 0; y < size; ++y) {
      for (int x = 0; x < size; ++x) img.set(x, y, static_cast<std::uint8_t>(draw(0, 255)));
    }
    return img;
  }
  const int offset = draw(-10, 10);
  const int cell = pattern == Pattern::Checker2 ? 1 : 4;
  const int px = draw(0, 2 * cell - 1), py = draw(0, 2 * cell - 1);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int v = 128;
      if (pattern != Pattern::Constant) v = (((x + px) / cell + (y + py) / cell) % 2) ? 192 : 64;
      v += offset + draw(-2, 2);
      img.set(x, y, static_cast<std::uint8_t>(std::clamp(v, 0, 255)));
    }
  }
  return img;
}

std::vector<LabeledImage> make_dataset(int per_class, int size, std::uint64_t seed) {
  std::vector<LabeledImage> out;
  std::uint64_t s = seed;
  for (Pattern p : all_patterns()) {
    for (int i = 0; i < per_class; ++i) {
      // splitmix-style stride keeps per-sample seeds distinct
      s += 0x9E3779B97F4A7C15ull;
      out.push_back({make_texture(p, size, s), to_string(p)});
    }
  }
  return out;
}

}  // namespace fractex::synthetic
