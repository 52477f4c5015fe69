#include <cmath>
#include <cstring>

#include "studio/error.hpp"
#include "studio/hash.hpp"
#include "studio/media/media.hpp"

namespace studio::media {

namespace {

constexpr std::uint32_t kAvifHasIndex = 0x10;
constexpr std::uint32_t kIndexKeyframe = 0x10;

class Writer {
 public:
  Bytes out;

  void u16(std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
  }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void fourcc(const char* s) { out.insert(out.end(), s, s + 4); }
  void bytes(std::span<const std::uint8_t> b) { out.insert(out.end(), b.begin(), b.end()); }

  // Opens a chunk (or LIST when `list` is set) and returns the size field offset.
  std::size_t open(const char* id, const char* list = nullptr) {
    fourcc(id);
    const std::size_t at = out.size();
    u32(0);
    if (list != nullptr) fourcc(list);
    return at;
  }
  void close(std::size_t size_at) {
    const auto size = static_cast<std::uint32_t>(out.size() - size_at - 4);
    for (int i = 0; i < 4; ++i) out[size_at + i] = static_cast<std::uint8_t>(size >> (8 * i));
    if (out.size() % 2 != 0) out.push_back(0);
  }
};

struct IndexEntry {
  char id[4];
  std::uint32_t offset;
  std::uint32_t size;
};

std::uint32_t rd32(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 4 > b.size()) throw Error(Errc::decode_error, "truncated AVI");
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(b[at + i]) << (8 * i);
  return v;
}

std::uint16_t rd16(std::span<const std::uint8_t> b, std::size_t at) {
  if (at + 2 > b.size()) throw Error(Errc::decode_error, "truncated AVI");
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

bool is(std::span<const std::uint8_t> b, std::size_t at, const char* id) {
  return at + 4 <= b.size() && std::memcmp(b.data() + at, id, 4) == 0;
}

struct StreamInfo {
  std::string type;
  std::uint32_t scale = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> format;
};

struct Parser {
  std::span<const std::uint8_t> b;
  std::vector<StreamInfo> streams;
  AviContents out;
  std::vector<std::uint8_t> audio_bytes;
  bool have_audio_chunks = false;

  void walk(std::size_t begin, std::size_t end, bool in_movi) {
    std::size_t at = begin;
    while (at + 8 <= end) {
      const std::uint32_t size = rd32(b, at + 4);
      const std::size_t body = at + 8;
      if (body + size > end) throw Error(Errc::decode_error, "AVI chunk overruns its parent");
      if (is(b, at, "LIST")) {
        if (size < 4) throw Error(Errc::decode_error, "short LIST");
        const bool movi = is(b, body, "movi");
        if (is(b, body, "strl")) streams.emplace_back();
        walk(body + 4, body + size, in_movi || movi);
      } else if (is(b, at, "strh") && !streams.empty()) {
        if (size < 56) throw Error(Errc::decode_error, "short stream header");
        streams.back().type.assign(reinterpret_cast<const char*>(b.data() + body), 4);
        streams.back().scale = rd32(b, body + 20);
        streams.back().rate = rd32(b, body + 24);
      } else if (is(b, at, "strf") && !streams.empty()) {
        streams.back().format = b.subspan(body, size);
      } else if (is(b, at, "avih")) {
        if (size < 40) throw Error(Errc::decode_error, "short main header");
        out.width = static_cast<int>(rd32(b, body + 32));
        out.height = static_cast<int>(rd32(b, body + 36));
      } else if (in_movi) {
        const auto id = std::string(reinterpret_cast<const char*>(b.data() + at), 4);
        const auto payload = b.subspan(body, size);
        if (id.substr(2) == "dc" || id.substr(2) == "db") {
          out.video_chunks.emplace_back(payload.begin(), payload.end());
        } else if (id.substr(2) == "wb") {
          audio_bytes.insert(audio_bytes.end(), payload.begin(), payload.end());
          have_audio_chunks = true;
        }
      }
      at = body + size + (size % 2);
    }
  }
};

}  // namespace

Bytes write_avi(const AviContents& c) {
  if (c.fps < 1 || c.width < 1 || c.height < 1) throw Error(Errc::invalid_argument, "invalid AVI parameters");
  const bool audio = c.audio.has_value();
  const auto frames = static_cast<std::uint32_t>(c.video_chunks.size());
  std::uint32_t max_video = 0;
  for (const auto& v : c.video_chunks) max_video = std::max<std::uint32_t>(max_video, static_cast<std::uint32_t>(v.size()));

  Writer w;
  const auto riff = w.open("RIFF", "AVI ");
  const auto hdrl = w.open("LIST", "hdrl");
  const auto avih = w.open("avih");
  w.u32(static_cast<std::uint32_t>(std::lround(1e6 / c.fps)));
  w.u32(max_video * static_cast<std::uint32_t>(c.fps) + (audio ? 2 * kSampleRate : 0));
  w.u32(0);
  w.u32(kAvifHasIndex);
  w.u32(frames);
  w.u32(0);
  w.u32(audio ? 2 : 1);
  w.u32(max_video);
  w.u32(static_cast<std::uint32_t>(c.width));
  w.u32(static_cast<std::uint32_t>(c.height));
  for (int i = 0; i < 4; ++i) w.u32(0);
  w.close(avih);

  const auto vstrl = w.open("LIST", "strl");
  const auto vstrh = w.open("strh");
  w.fourcc("vids");
  w.fourcc("MJPG");
  w.u32(0);
  w.u16(0);
  w.u16(0);
  w.u32(0);
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(c.fps));
  w.u32(0);
  w.u32(frames);
  w.u32(max_video);
  w.u32(0xFFFFFFFFu);
  w.u32(0);
  w.u16(0);
  w.u16(0);
  w.u16(static_cast<std::uint16_t>(c.width));
  w.u16(static_cast<std::uint16_t>(c.height));
  w.close(vstrh);
  const auto vstrf = w.open("strf");
  w.u32(40);
  w.u32(static_cast<std::uint32_t>(c.width));
  w.u32(static_cast<std::uint32_t>(c.height));
  w.u16(1);
  w.u16(24);
  w.fourcc("MJPG");
  w.u32(static_cast<std::uint32_t>(c.width * c.height * 3));
  for (int i = 0; i < 4; ++i) w.u32(0);
  w.close(vstrf);
  w.close(vstrl);

  if (audio) {
    const auto samples = static_cast<std::uint32_t>(c.audio->samples.size());
    const auto astrl = w.open("LIST", "strl");
    const auto astrh = w.open("strh");
    w.fourcc("auds");
    w.u32(0);
    w.u32(0);
    w.u16(0);
    w.u16(0);
    w.u32(0);
    w.u32(2);
    w.u32(2 * kSampleRate);
    w.u32(0);
    w.u32(samples);
    w.u32(2 * kSampleRate);
    w.u32(0xFFFFFFFFu);
    w.u32(2);
    for (int i = 0; i < 4; ++i) w.u16(0);
    w.close(astrh);
    const auto astrf = w.open("strf");
    w.u16(1);
    w.u16(1);
    w.u32(kSampleRate);
    w.u32(2 * kSampleRate);
    w.u16(2);
    w.u16(16);
    w.close(astrf);
    w.close(astrl);
  }
  w.close(hdrl);

  std::vector<IndexEntry> index;
  const auto movi = w.open("LIST", "movi");
  const std::size_t movi_fourcc = movi + 4;
  auto chunk = [&](const char* id, std::span<const std::uint8_t> payload) {
    IndexEntry e{};
    std::memcpy(e.id, id, 4);
    e.offset = static_cast<std::uint32_t>(w.out.size() - movi_fourcc);
    e.size = static_cast<std::uint32_t>(payload.size());
    index.push_back(e);
    const auto at = w.open(id);
    w.bytes(payload);
    w.close(at);
  };
  auto audio_slice = [&](std::size_t from, std::size_t to) {
    Bytes le;
    le.reserve((to - from) * 2);
    for (std::size_t i = from; i < to; ++i) {
      const auto s = static_cast<std::uint16_t>(c.audio->samples[i]);
      le.push_back(static_cast<std::uint8_t>(s));
      le.push_back(static_cast<std::uint8_t>(s >> 8));
    }
    return le;
  };
  std::size_t written = 0;
  const std::size_t total_samples = audio ? c.audio->samples.size() : 0;
  for (std::uint32_t f = 0; f < frames; ++f) {
    chunk("00dc", c.video_chunks[f]);
    if (audio) {
      const auto until =
          std::min(total_samples, static_cast<std::size_t>(std::llround((f + 1.0) * kSampleRate / c.fps)));
      if (until > written) {
        chunk("01wb", audio_slice(written, until));
        written = until;
      }
    }
  }
  if (audio && written < total_samples) chunk("01wb", audio_slice(written, total_samples));
  w.close(movi);

  const auto idx1 = w.open("idx1");
  for (const auto& e : index) {
    w.out.insert(w.out.end(), e.id, e.id + 4);
    w.u32(kIndexKeyframe);
    w.u32(e.offset);
    w.u32(e.size);
  }
  w.close(idx1);
  w.close(riff);
  return std::move(w.out);
}

AviContents read_avi(std::span<const std::uint8_t> b) {
  if (b.size() < 12 || !is(b, 0, "RIFF") || !is(b, 8, "AVI ")) throw Error(Errc::decode_error, "not an AVI file");
  const std::size_t end = std::min<std::size_t>(b.size(), std::size_t{rd32(b, 4)} + 8);
  Parser p{b, {}, {}, {}, false};
  p.walk(12, end, false);
  bool have_video = false;
  for (const auto& s : p.streams) {
    if (s.type == "vids") {
      if (s.scale == 0) throw Error(Errc::decode_error, "video stream without time base");
      p.out.fps = static_cast<int>(std::lround(static_cast<double>(s.rate) / s.scale));
      have_video = true;
    } else if (s.type == "auds") {
      if (s.format.size() < 16 || rd16(s.format, 0) != 1 || rd16(s.format, 2) != 1 ||
          rd32(s.format, 4) != static_cast<std::uint32_t>(kSampleRate) || rd16(s.format, 14) != 16)
        throw Error(Errc::decode_error, "unsupported audio stream format");
      PcmAudio pcm;
      pcm.samples.resize(p.audio_bytes.size() / 2);
      for (std::size_t i = 0; i < pcm.samples.size(); ++i)
        pcm.samples[i] = static_cast<std::int16_t>(p.audio_bytes[2 * i] | (p.audio_bytes[2 * i + 1] << 8));
      p.out.audio = std::move(pcm);
    }
  }
  if (!have_video) throw Error(Errc::decode_error, "AVI has no video stream");
  return std::move(p.out);
}

std::string video_stream_hash(const AviContents& contents) {
  Sha256 h;
  for (const auto& c : contents.video_chunks) h.update(std::span<const std::uint8_t>(c));
  return h.hex_digest();
}

std::string video_stream_hash(std::span<const std::uint8_t> avi_bytes) { return video_stream_hash(read_avi(avi_bytes)); }

}  // namespace studio::media
