#include "studio/wav.hpp"

#include <cmath>
#include <cstring>
#include <numbers>
#include <string>

#include "studio/error.hpp"

namespace studio {

namespace {

void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(Bytes& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}
void put_tag(Bytes& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint32_t get_u32(const std::uint8_t* p) {
  return std::uint32_t(p[0]) | std::uint32_t(p[1]) << 8 | std::uint32_t(p[2]) << 16 | std::uint32_t(p[3]) << 24;
}
std::uint16_t get_u16(const std::uint8_t* p) { return static_cast<std::uint16_t>(p[0] | p[1] << 8); }

}  // namespace

Bytes encode_wav(const PcmAudio& audio) {
  const auto data_bytes = static_cast<std::uint32_t>(audio.samples.size() * 2);
  Bytes out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (std::int16_t s : audio.samples) put_u16(out, static_cast<std::uint16_t>(s));
  return out;
}

PcmAudio decode_wav(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 || std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw Error(Errc::decode_error, "not a RIFF/WAVE stream");
  bool have_fmt = false;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    const std::uint32_t size = get_u32(chunk + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) throw Error(Errc::decode_error, "truncated WAV chunk");
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16) throw Error(Errc::decode_error, "short fmt chunk");
      const std::uint8_t* f = bytes.data() + body;
      const auto format = get_u16(f), channels = get_u16(f + 2), bits = get_u16(f + 14);
      const auto rate = get_u32(f + 4);
      if (format != 1 || channels != 1 || bits != 16 || rate != kSampleRate)
        throw Error(Errc::decode_error, "expected PCM 16-bit mono 16 kHz, got format=" + std::to_string(format) +
                                            " channels=" + std::to_string(channels) + " bits=" +
                                            std::to_string(bits) + " rate=" + std::to_string(rate));
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw Error(Errc::decode_error, "data chunk before fmt chunk");
      if (size == 0 || size % 2 != 0) throw Error(Errc::decode_error, "empty or odd-sized PCM payload");
      PcmAudio audio;
      audio.samples.resize(size / 2);
      for (std::size_t i = 0; i < audio.samples.size(); ++i)
        audio.samples[i] = static_cast<std::int16_t>(get_u16(bytes.data() + body + 2 * i));
      return audio;
    }
    pos = body + size + (size & 1);
  }
  throw Error(Errc::decode_error, "no PCM data chunk");
}

PcmAudio silence(std::size_t sample_count) {
  PcmAudio audio;
  audio.samples.assign(sample_count, 0);
  return audio;
}

PcmAudio tone(double seconds, double frequency_hz, double amplitude) {
  const auto n = static_cast<std::size_t>(std::llround(seconds * kSampleRate));
  PcmAudio audio;
  audio.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kSampleRate;
    audio.samples[i] =
        static_cast<std::int16_t>(std::lround(32767.0 * amplitude * std::sin(2 * std::numbers::pi * frequency_hz * t)));
  }
  return audio;
}

}  // namespace studio
