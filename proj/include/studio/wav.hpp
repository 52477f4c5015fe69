#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "studio/io.hpp"

namespace studio {

inline constexpr int kSampleRate = 16000;

// 16-bit mono PCM at kSampleRate, the only audio layout the studio accepts.
struct PcmAudio {
  std::vector<std::int16_t> samples;

  double duration() const { return static_cast<double>(samples.size()) / kSampleRate; }
  bool operator==(const PcmAudio&) const = default;
};

Bytes encode_wav(const PcmAudio& audio);

// Throws DecodeError unless the stream is RIFF/WAVE PCM 16-bit mono 16 kHz with
// at least one sample.
PcmAudio decode_wav(std::span<const std::uint8_t> bytes);

PcmAudio silence(std::size_t sample_count);
PcmAudio tone(double seconds, double frequency_hz, double amplitude = 0.3);

}  // namespace studio
