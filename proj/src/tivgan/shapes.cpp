#include <array>
#include <cmath>
#include <random>

#include "studio/error.hpp"
#include "studio/tivgan/dataset.hpp"

namespace studio::tivgan {

namespace {

struct Colour {
  const char* name;
  std::array<std::uint8_t, 3> rgb;
};

constexpr std::array<Colour, 4> kColours = {{
    {"red", {220, 40, 40}},
    {"green", {40, 200, 60}},
    {"blue", {50, 80, 230}},
    {"yellow", {230, 210, 40}},
}};
constexpr std::array<const char*, 3> kShapes = {"circle", "square", "triangle"};
constexpr std::array<const char*, 4> kDirections = {"left", "right", "up", "down"};
constexpr std::array<std::uint8_t, 3> kBackground = {18, 18, 28};

bool inside(int shape, double dx, double dy, double r) {
  switch (shape) {
    case 0: return dx * dx + dy * dy <= r * r;
    case 1: return std::abs(dx) <= r * 0.85 && std::abs(dy) <= r * 0.85;
    default: {
      // Upward-pointing isosceles triangle inscribed in the r-box.
      if (dy < -r || dy > r) return false;
      const double half_width = (dy + r) / 2.0;
      return std::abs(dx) <= half_width;
    }
  }
}

}  // namespace

Dataset make_shapes_corpus(const ShapesOptions& o) {
  if (o.clips < 1 || o.frames < 1 || o.size < 8) throw Error(Errc::config_error, "invalid shapes corpus options");
  std::mt19937_64 rng(o.seed);
  auto pick = [&](int n) { return static_cast<int>(std::uniform_int_distribution<int>(0, n - 1)(rng)); };
  Dataset data;
  const double radius_base = o.size / 6.0;
  for (int i = 0; i < o.clips; ++i) {
    const int colour = pick(static_cast<int>(kColours.size()));
    const int shape = pick(static_cast<int>(kShapes.size()));
    const int direction = pick(static_cast<int>(kDirections.size()));
    const double radius = radius_base * (0.85 + 0.3 * std::uniform_real_distribution<double>(0, 1)(rng));
    const double speed = o.size / 32.0 * (1.0 + std::uniform_real_distribution<double>(0, 1)(rng));
    const double travel = speed * (o.frames - 1);
    double vx = 0, vy = 0;
    switch (direction) {
      case 0: vx = -speed; break;
      case 1: vx = speed; break;
      case 2: vy = -speed; break;
      default: vy = speed; break;
    }
    // Start so the shape stays fully visible for the whole clip.
    auto start_range = [&](double v) {
      double lo = radius, hi = o.size - 1 - radius;
      if (v < 0) lo += travel;
      if (v > 0) hi -= travel;
      if (hi < lo) hi = lo;
      return std::uniform_real_distribution<double>(lo, hi)(rng);
    };
    const double x0 = start_range(vx);
    const double y0 = start_range(vy);

    Clip clip;
    clip.caption = std::string(kColours[colour].name) + " " + kShapes[shape] + " moving " + kDirections[direction];
    for (int f = 0; f < o.frames; ++f) {
      RgbImage img(o.size, o.size);
      const double cx = x0 + vx * f, cy = y0 + vy * f;
      for (int y = 0; y < o.size; ++y)
        for (int x = 0; x < o.size; ++x) {
          const auto& c = inside(shape, x - cx, y - cy, radius) ? kColours[colour].rgb : kBackground;
          std::copy(c.begin(), c.end(), img.at(x, y));
        }
      clip.frames.push_back(frame_from_image(img, 3));
    }
    data.clips.push_back(std::move(clip));
  }
  return data;
}

}  // namespace studio::tivgan
