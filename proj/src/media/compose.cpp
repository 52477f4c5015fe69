#include <cmath>
#include <nlohmann/json.hpp>
#include <set>

#include "studio/error.hpp"
#include "studio/hash.hpp"
#include "studio/media/media.hpp"

namespace studio::media {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int segment_frames(double duration, int fps) { return static_cast<int>(std::lround(duration * fps)); }

}  // namespace

double MediaManifest::total_duration() const {
  double total = 0.0;
  for (const auto& s : segments) total += s.duration;
  return total;
}

int MediaManifest::frame_count() const {
  int total = 0;
  for (const auto& s : segments) total += segment_frames(s.duration, fps);
  return total;
}

std::vector<std::optional<std::string>> MediaManifest::audio() const {
  std::vector<std::optional<std::string>> out;
  for (const auto& s : segments) out.push_back(s.audio);
  return out;
}

void MediaManifest::validate() const {
  if (fps < 1) throw Error(Errc::invalid_argument, "fps must be at least 1");
  if (width < 1 || height < 1) throw Error(Errc::invalid_argument, "frame size must be positive");
  if (segments.empty()) throw Error(Errc::empty_selection, "manifest has no segments");
  for (const auto& s : segments) {
    if (!(s.duration > 0) || !std::isfinite(s.duration))
      throw Error(Errc::invalid_argument, "segment '" + s.term + "' has a non-positive duration");
    if (s.images.empty()) throw Error(Errc::empty_selection, "segment '" + s.term + "' has no images");
  }
}

std::string MediaManifest::serialize() const {
  json segs = json::array();
  for (const auto& s : segments)
    segs.push_back({{"term", s.term},
                    {"images", s.images},
                    {"duration", s.duration},
                    {"audio", s.audio ? json(*s.audio) : json(nullptr)}});
  json j = {{"fps", fps},
            {"width", width},
            {"height", height},
            {"segments", segs},
            {"total_duration", total_duration()},
            {"frame_count", frame_count()}};
  return j.dump(2) + "\n";
}

MediaManifest MediaManifest::parse(std::string_view text) {
  MediaManifest m;
  try {
    const json j = json::parse(text);
    m.fps = j.at("fps");
    m.width = j.value("width", m.width);
    m.height = j.value("height", m.height);
    for (const auto& s : j.at("segments")) {
      Segment seg;
      seg.term = s.at("term");
      seg.images = s.at("images").get<std::vector<std::string>>();
      seg.duration = s.at("duration");
      if (!s.at("audio").is_null()) seg.audio = s.at("audio").get<std::string>();
      m.segments.push_back(std::move(seg));
    }
  } catch (const json::exception& e) {
    throw Error(Errc::decode_error, std::string("manifest: ") + e.what());
  }
  return m;
}

MediaManifest build_manifest(const kwx::TermList& terms,
                             const std::map<std::string, std::vector<std::string>>& selections,
                             const catalog::Catalog& catalog, const ManifestOptions& options) {
  std::set<std::string> known;
  for (const auto& t : terms.terms) known.insert(t.term);
  for (const auto& [term, ids] : selections)
    if (!ids.empty() && !known.count(term))
      throw Error(Errc::invalid_argument, "selection for term '" + term + "' which was not extracted");

  const auto index = catalog.snapshot();
  MediaManifest m;
  m.fps = options.fps;
  m.width = options.width;
  m.height = options.height;
  for (const auto& t : terms.terms) {
    auto it = selections.find(t.term);
    if (it == selections.end() || it->second.empty()) continue;
    for (const auto& id : it->second)
      if (!index->image_meta.count(id)) throw Error(Errc::unknown_asset, "unknown image " + id);
    Segment seg;
    seg.term = t.term;
    seg.images = it->second;
    seg.duration = options.default_duration;
    auto entry = index->terms.find(t.term);
    if (entry != index->terms.end() && entry->second.audio) {
      const auto audio = catalog.get_audio(t.term);
      seg.duration = audio.duration;
      seg.audio = audio.asset_id;
    }
    m.segments.push_back(std::move(seg));
  }
  if (m.segments.empty()) throw Error(Errc::empty_selection, "no term has a selected image");
  m.validate();
  return m;
}

std::pair<int, int> image_frame_range(int image, int image_count, int frames) {
  const auto first = static_cast<int>(static_cast<long long>(image) * frames / image_count);
  const auto last = static_cast<int>(static_cast<long long>(image + 1) * frames / image_count);
  return {first, last};
}

SilentVideo render_silent_video(const MediaManifest& manifest, const catalog::Catalog& catalog,
                                const RenderOptions& options) {
  manifest.validate();
  SilentVideo video;
  video.fps = manifest.fps;
  video.nominal_duration = manifest.total_duration();
  std::vector<Bytes> jpegs;
  for (const auto& seg : manifest.segments) {
    const int frames = segment_frames(seg.duration, manifest.fps);
    const int k = static_cast<int>(seg.images.size());
    for (int i = 0; i < k; ++i) {
      const auto asset = catalog.find_image(seg.images[i]);
      if (!asset) throw Error(Errc::unknown_asset, "unknown image " + seg.images[i]);
      const auto [first, last] = image_frame_range(i, k, frames);
      if (first == last) continue;
      const RgbImage source = decode_png(asset->bytes);
      const Resample mode = asset->origin == catalog::Origin::generated ? Resample::nearest : Resample::bilinear;
      video.stills.push_back(letterbox(source, manifest.width, manifest.height, mode));
      jpegs.push_back(encode_jpeg(video.stills.back(), options.jpeg_quality));
      for (int f = first; f < last; ++f) video.frame_still.push_back(static_cast<int>(video.stills.size()) - 1);
    }
  }
  video.frame_count = static_cast<int>(video.frame_still.size());

  AviContents avi;
  avi.width = manifest.width;
  avi.height = manifest.height;
  avi.fps = manifest.fps;
  for (int s : video.frame_still) avi.video_chunks.push_back(jpegs[static_cast<std::size_t>(s)]);
  video.container = write_avi(avi);
  return video;
}

catalog::AudioAsset assemble_audio(const MediaManifest& manifest, const catalog::Catalog& catalog) {
  PcmAudio out;
  for (const auto& seg : manifest.segments) {
    if (seg.audio) {
      const auto clip = catalog.audio_by_id(*seg.audio);
      const PcmAudio pcm = decode_wav(clip.bytes);
      out.samples.insert(out.samples.end(), pcm.samples.begin(), pcm.samples.end());
    } else {
      out.samples.resize(out.samples.size() + static_cast<std::size_t>(std::llround(seg.duration * kSampleRate)), 0);
    }
  }
  catalog::AudioAsset asset;
  asset.bytes = encode_wav(out);
  asset.asset_id = sha256_hex(asset.bytes);
  asset.duration = out.duration();
  return asset;
}

Bundle write_bundle(const SilentVideo& video, const PcmAudio& audio, const MediaManifest& manifest,
                    const fs::path& dir) {
  fs::create_directories(dir / "frames");
  std::vector<Bytes> pngs;
  for (const auto& still : video.stills) pngs.push_back(encode_png(still));
  char name[32];
  for (int f = 0; f < video.frame_count; ++f) {
    std::snprintf(name, sizeof name, "%05d.png", f);
    write_file_atomic(dir / "frames" / name, pngs[static_cast<std::size_t>(video.frame_still[f])]);
  }
  write_file_atomic(dir / "audio.wav", encode_wav(audio));
  json m = json::parse(manifest.serialize());
  m["rendered_frame_count"] = video.frame_count;
  m["audio_samples"] = audio.samples.size();
  write_file_atomic(dir / "manifest.json", m.dump(2) + "\n");
  return Bundle{dir, video.frame_count};
}

bool bundle_complete(const fs::path& dir) {
  if (!fs::exists(dir / "manifest.json") || !fs::exists(dir / "audio.wav")) return false;
  try {
    const json m = json::parse(read_text_file(dir / "manifest.json"));
    const int frames = m.at("rendered_frame_count");
    char name[32];
    for (int f = 0; f < frames; ++f) {
      std::snprintf(name, sizeof name, "%05d.png", f);
      if (!fs::exists(dir / "frames" / name)) return false;
    }
    std::snprintf(name, sizeof name, "%05d.png", frames);
    if (fs::exists(dir / "frames" / name)) return false;
    return decode_wav(read_file(dir / "audio.wav")).samples.size() == m.at("audio_samples").get<std::size_t>();
  } catch (const std::exception&) {
    return false;
  }
}

}  // namespace studio::media
