#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "studio/image.hpp"

namespace studio::tivgan {

// One H x W x C frame with entries in [-1, 1], stored HWC.
struct Frame {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> values;

  Frame() = default;
  Frame(int h, int w, int c) : height(h), width(w), channels(c), values(static_cast<std::size_t>(h) * w * c, 0.f) {}
  float& at(int y, int x, int c) { return values[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  float at(int y, int x, int c) const { return values[(static_cast<std::size_t>(y) * width + x) * channels + c]; }
  bool operator==(const Frame&) const = default;
};

struct FrameSequence {
  std::vector<Frame> frames;
  double fps = 8.0;
};

struct Clip {
  std::string caption;
  std::vector<Frame> frames;
};

struct Dataset {
  std::vector<Clip> clips;

  std::vector<std::string> caption_words() const;  // normalized tokens across all captions
  std::size_t distinct_captions() const;
};

// RGB 8-bit <-> [-1, 1] frames. Grayscale frames (C = 1) replicate to RGB.
Frame frame_from_image(const RgbImage& image, int channels = 3);
RgbImage image_from_frame(const Frame& frame);

// On-disk layout: <root>/<clip>/caption.txt plus frame_00000.png, frame_00001.png, ...
void save_dataset(const Dataset& data, const std::filesystem::path& root);
Dataset load_dataset(const std::filesystem::path& root, int channels = 3);

struct ShapesOptions {
  int clips = 64;
  int frames = 8;
  int size = 32;
  std::uint64_t seed = 7;
};

// Procedural corpus of coloured shapes moving across a dark background, each
// captioned "<colour> <shape> moving <direction>".
Dataset make_shapes_corpus(const ShapesOptions& options);

}  // namespace studio::tivgan
