#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "studio/catalog/catalog.hpp"
#include "studio/image.hpp"
#include "studio/kwx/kwx.hpp"
#include "studio/wav.hpp"

namespace studio::media {

struct Segment {
  std::string term;
  std::vector<std::string> images;   // asset ids, display order
  double duration = 0.0;             // seconds
  std::optional<std::string> audio;  // audio asset id
  bool operator==(const Segment&) const = default;
};

struct MediaManifest {
  std::vector<Segment> segments;
  int fps = 8;
  int width = 320;
  int height = 240;

  double total_duration() const;
  int frame_count() const;  // sum of round(duration * fps)
  std::vector<std::optional<std::string>> audio() const;
  std::string serialize() const;
  static MediaManifest parse(std::string_view json);
  void validate() const;
  bool operator==(const MediaManifest&) const = default;
};

inline constexpr double kDefaultSegmentSeconds = 2.0;

struct ManifestOptions {
  double default_duration = kDefaultSegmentSeconds;
  int fps = 8;
  int width = 320;
  int height = 240;
};

// Segments follow term rank order; terms with no selected image are skipped.
MediaManifest build_manifest(const kwx::TermList& terms,
                             const std::map<std::string, std::vector<std::string>>& selections,
                             const catalog::Catalog& catalog, const ManifestOptions& options = {});

// Frame range [first, last) that image i of k covers in a segment of n frames.
std::pair<int, int> image_frame_range(int image, int image_count, int segment_frames);

struct SilentVideo {
  Bytes container;             // MJPEG AVI, no audio stream
  std::vector<RgbImage> stills;
  std::vector<int> frame_still;  // still index per frame
  int frame_count = 0;
  int fps = 8;
  double nominal_duration = 0.0;  // manifest total

  double duration() const { return static_cast<double>(frame_count) / fps; }
};

struct RenderOptions {
  int jpeg_quality = 90;
};

SilentVideo render_silent_video(const MediaManifest& manifest, const catalog::Catalog& catalog,
                                const RenderOptions& options = {});

catalog::AudioAsset assemble_audio(const MediaManifest& manifest, const catalog::Catalog& catalog);

// JPEG codec (baseline, 4:2:0, deterministic for a fixed quality).
Bytes encode_jpeg(const RgbImage& image, int quality);
RgbImage decode_jpeg(std::span<const std::uint8_t> bytes);

// AVI (RIFF) container with an MJPEG video stream and optional PCM audio.
struct AviContents {
  int width = 0;
  int height = 0;
  int fps = 0;
  std::vector<Bytes> video_chunks;
  std::optional<PcmAudio> audio;

  double video_duration() const { return fps > 0 ? static_cast<double>(video_chunks.size()) / fps : 0.0; }
};

Bytes write_avi(const AviContents& contents);
AviContents read_avi(std::span<const std::uint8_t> bytes);  // throws DecodeError

// SHA-256 over the concatenated video chunk payloads.
std::string video_stream_hash(const AviContents& contents);
std::string video_stream_hash(std::span<const std::uint8_t> avi_bytes);

class Muxer {
 public:
  virtual ~Muxer() = default;
  virtual std::string name() const = 0;
  virtual bool available() const = 0;
  virtual std::string container_extension() const = 0;
  // Copies the video stream of `video` and the audio of `wav` into `output`.
  virtual void mux(const std::filesystem::path& video, const std::filesystem::path& wav,
                   const std::filesystem::path& output) = 0;
};

// In-process AVI remux. Always available.
class AviMuxer final : public Muxer {
 public:
  std::string name() const override { return "avi"; }
  bool available() const override { return true; }
  std::string container_extension() const override { return ".avi"; }
  void mux(const std::filesystem::path& video, const std::filesystem::path& wav,
           const std::filesystem::path& output) override;
};

// Shells out to an FFmpeg-compatible binary for MP4 output.
class FfmpegMuxer final : public Muxer {
 public:
  explicit FfmpegMuxer(std::string binary = "ffmpeg") : binary_(std::move(binary)) {}
  std::string name() const override { return "ffmpeg"; }
  bool available() const override;
  std::string container_extension() const override { return ".mp4"; }
  void mux(const std::filesystem::path& video, const std::filesystem::path& wav,
           const std::filesystem::path& output) override;

 private:
  std::string binary_;
};

// Muxer that never works; selects the bundle path.
class NullMuxer final : public Muxer {
 public:
  std::string name() const override { return "none"; }
  bool available() const override { return false; }
  std::string container_extension() const override { return ""; }
  void mux(const std::filesystem::path&, const std::filesystem::path&, const std::filesystem::path&) override;
};

std::unique_ptr<Muxer> make_muxer(std::string_view name);  // "avi", "ffmpeg", "none"

inline constexpr double kMaxDurationDelta = 0.050;

struct FinalVideo {
  std::filesystem::path path;
  Bytes container;
  std::string video_hash;  // of the copied video stream
  double duration = 0.0;
  double audio_duration = 0.0;
};

// Writes <workdir>/silent.avi and <workdir>/audio.wav, then muxes into
// <workdir>/final<ext>. The audio is padded or trimmed to the video's frame
// duration after the DurationMismatch check against the nominal duration.
FinalVideo mux(const SilentVideo& video, const PcmAudio& audio, Muxer& muxer, const std::filesystem::path& workdir);

// Fallback layout: frames/%05d.png, audio.wav, manifest.json.
struct Bundle {
  std::filesystem::path root;
  int frame_count = 0;
};

Bundle write_bundle(const SilentVideo& video, const PcmAudio& audio, const MediaManifest& manifest,
                    const std::filesystem::path& dir);
bool bundle_complete(const std::filesystem::path& dir);

}  // namespace studio::media
