#include "studio/tivgan/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <set>

#include "studio/error.hpp"
#include "studio/io.hpp"
#include "studio/kwx/kwx.hpp"

namespace studio::tivgan {

namespace fs = std::filesystem;

std::vector<std::string> Dataset::caption_words() const {
  std::set<std::string> words;
  for (const auto& clip : clips)
    for (auto& t : kwx::normalize_text(clip.caption).tokens) words.insert(t);
  return {words.begin(), words.end()};
}

std::size_t Dataset::distinct_captions() const {
  std::set<std::string> seen;
  for (const auto& clip : clips) seen.insert(clip.caption);
  return seen.size();
}

Frame frame_from_image(const RgbImage& image, int channels) {
  Frame f(image.height, image.width, channels);
  for (int y = 0; y < image.height; ++y)
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* px = image.at(x, y);
      if (channels == 1) {
        f.at(y, x, 0) = ((px[0] + px[1] + px[2]) / 3.0f) / 127.5f - 1.0f;
        continue;
      }
      for (int c = 0; c < channels; ++c) f.at(y, x, c) = px[std::min(c, 2)] / 127.5f - 1.0f;
    }
  return f;
}

RgbImage image_from_frame(const Frame& frame) {
  RgbImage img(frame.width, frame.height);
  for (int y = 0; y < frame.height; ++y)
    for (int x = 0; x < frame.width; ++x)
      for (int c = 0; c < 3; ++c) {
        const float v = frame.at(y, x, frame.channels == 1 ? 0 : std::min(c, frame.channels - 1));
        img.at(x, y)[c] = static_cast<std::uint8_t>(std::lround(std::clamp((v + 1.0f) * 127.5f, 0.0f, 255.0f)));
      }
  return img;
}

void save_dataset(const Dataset& data, const fs::path& root) {
  fs::create_directories(root);
  for (std::size_t i = 0; i < data.clips.size(); ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "clip_%05zu", i);
    const fs::path dir = root / name;
    fs::create_directories(dir);
    write_file_atomic(dir / "caption.txt", data.clips[i].caption + "\n");
    for (std::size_t f = 0; f < data.clips[i].frames.size(); ++f) {
      char frame_name[32];
      std::snprintf(frame_name, sizeof frame_name, "frame_%05zu.png", f);
      write_file_atomic(dir / frame_name, encode_png(image_from_frame(data.clips[i].frames[f])));
    }
  }
}

Dataset load_dataset(const fs::path& root, int channels) {
  if (!fs::is_directory(root)) throw Error(Errc::not_found, "dataset directory " + root.string() + " not found");
  std::vector<fs::path> dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory() && fs::exists(entry.path() / "caption.txt")) dirs.push_back(entry.path());
  std::sort(dirs.begin(), dirs.end());
  Dataset data;
  for (const auto& dir : dirs) {
    Clip clip;
    clip.caption = read_text_file(dir / "caption.txt");
    while (!clip.caption.empty() && (clip.caption.back() == '\n' || clip.caption.back() == '\r')) clip.caption.pop_back();
    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(dir))
      if (entry.path().extension() == ".png") frames.push_back(entry.path());
    std::sort(frames.begin(), frames.end());
    for (const auto& f : frames) clip.frames.push_back(frame_from_image(decode_png(read_file(f)), channels));
    if (clip.frames.empty()) throw Error(Errc::insufficient_data, "clip " + dir.string() + " has no frames");
    data.clips.push_back(std::move(clip));
  }
  return data;
}

}  // namespace studio::tivgan
