#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <sstream>

#include "studio/error.hpp"
#include "studio/media/media.hpp"

namespace studio::media {

namespace fs = std::filesystem;

namespace {

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

bool on_path(const std::string& binary) {
  if (binary.find('/') != std::string::npos) return ::access(binary.c_str(), X_OK) == 0;
  const char* path = std::getenv("PATH");
  if (path == nullptr) return false;
  std::stringstream ss(path);
  std::string dir;
  while (std::getline(ss, dir, ':')) {
    if (dir.empty()) continue;
    if (::access((fs::path(dir) / binary).c_str(), X_OK) == 0) return true;
  }
  return false;
}

}  // namespace

void AviMuxer::mux(const fs::path& video, const fs::path& wav, const fs::path& output) {
  AviContents contents = read_avi(read_file(video));
  contents.audio = decode_wav(read_file(wav));
  write_file_atomic(output, write_avi(contents));
}

bool FfmpegMuxer::available() const { return on_path(binary_); }

void FfmpegMuxer::mux(const fs::path& video, const fs::path& wav, const fs::path& output) {
  if (!available()) throw Error(Errc::muxer_unavailable, binary_ + " not found");
  const std::string cmd = shell_quote(binary_) + " -nostdin -loglevel error -y -i " + shell_quote(video.string()) +
                          " -i " + shell_quote(wav.string()) + " -map 0:v:0 -map 1:a:0 -c:v copy -c:a aac " +
                          shell_quote(output.string());
  if (std::system(cmd.c_str()) != 0 || !fs::exists(output))
    throw Error(Errc::adapter_error, binary_ + " failed to mux " + video.string());
}

void NullMuxer::mux(const fs::path&, const fs::path&, const fs::path&) {
  throw Error(Errc::muxer_unavailable, "no muxer configured");
}

std::unique_ptr<Muxer> make_muxer(std::string_view name) {
  if (name == "avi") return std::make_unique<AviMuxer>();
  if (name == "ffmpeg") return std::make_unique<FfmpegMuxer>();
  if (name == "none") return std::make_unique<NullMuxer>();
  throw Error(Errc::config_error, "unknown muxer '" + std::string(name) + "'");
}

FinalVideo mux(const SilentVideo& video, const PcmAudio& audio, Muxer& muxer, const fs::path& workdir) {
  if (!muxer.available()) throw Error(Errc::muxer_unavailable, "muxer '" + muxer.name() + "' is not available");
  const double delta = std::abs(audio.duration() - video.nominal_duration);
  if (delta > kMaxDurationDelta)
    throw Error(Errc::duration_mismatch, "audio is " + std::to_string(audio.duration()) + " s, video is " +
                                             std::to_string(video.nominal_duration) + " s");
  // Frame rounding can leave the video up to half a frame per segment away
  // from the nominal length; the audio follows the frames.
  PcmAudio fitted = audio;
  fitted.samples.resize(static_cast<std::size_t>(std::llround(video.duration() * kSampleRate)), 0);

  fs::create_directories(workdir);
  const fs::path silent = workdir / "silent.avi";
  const fs::path wav = workdir / "audio.wav";
  const fs::path out = workdir / ("final" + muxer.container_extension());
  write_file_atomic(silent, video.container);
  write_file_atomic(wav, encode_wav(fitted));
  muxer.mux(silent, wav, out);

  FinalVideo final;
  final.path = out;
  final.container = read_file(out);
  final.duration = video.duration();
  final.audio_duration = fitted.duration();
  if (muxer.container_extension() == ".avi") {
    const AviContents contents = read_avi(final.container);
    final.video_hash = video_stream_hash(contents);
    final.duration = contents.video_duration();
    final.audio_duration = contents.audio ? contents.audio->duration() : 0.0;
  }
  return final;
}

}  // namespace studio::media
