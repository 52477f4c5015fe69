#include "studio/service/fixtures.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <random>

#include "studio/hash.hpp"

namespace studio::service {

std::string fixture_sentence() {
  return "The water cycle moves water through evaporation, condensation and precipitation.";
}

std::vector<SeedTerm> fixture_terms() {
  return {
      {"water", 3, 1.5},        {"cycle", 2, 2.5}, {"evaporation", 3, 0.0}, {"condensation", 2, 1.0},
      {"precipitation", 3, 0.0}, {"cloud", 2, 2.0}, {"rain", 2, 0.0},        {"sun", 1, 1.25},
  };
}

namespace {

std::uint64_t word_hash(std::string_view text) {
  const std::string hex = sha256_hex(text);
  return std::stoull(hex.substr(0, 15), nullptr, 16);
}

RgbImage draw(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> dim(24, 96);
  std::uniform_int_distribution<int> byte(0, 255);
  RgbImage img(dim(rng), dim(rng));
  const int top[3] = {byte(rng), byte(rng), byte(rng)};
  const int bottom[3] = {byte(rng), byte(rng), byte(rng)};
  const int ink[3] = {byte(rng), byte(rng), byte(rng)};
  const double cx = std::uniform_real_distribution<double>(0.3, 0.7)(rng) * img.width;
  const double cy = std::uniform_real_distribution<double>(0.3, 0.7)(rng) * img.height;
  const double r = std::uniform_real_distribution<double>(0.15, 0.35)(rng) * std::min(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    const double t = img.height > 1 ? static_cast<double>(y) / (img.height - 1) : 0.0;
    for (int x = 0; x < img.width; ++x) {
      auto* p = img.at(x, y);
      const bool inside = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r;
      for (int c = 0; c < 3; ++c)
        p[c] = static_cast<std::uint8_t>(inside ? ink[c] : std::lround(top[c] * (1 - t) + bottom[c] * t));
    }
  }
  return img;
}

}  // namespace

void seed_catalog(catalog::Catalog& catalog, std::uint64_t seed) {
  for (const auto& t : fixture_terms()) {
    std::mt19937_64 rng(seed ^ word_hash(t.term));
    for (int i = 0; i < t.images; ++i) catalog.put_image(t.term, encode_png(draw(rng)), catalog::Origin::library);
    if (t.audio_seconds > 0) {
      const double hz = 220.0 + static_cast<double>(word_hash(t.term) % 440);
      catalog.put_audio(t.term, encode_wav(tone(t.audio_seconds, hz)));
    }
  }
}

PcmAudio speak(std::string_view text) {
  const auto normalized = kwx::normalize_text(text);
  PcmAudio out;
  for (const auto& word : normalized.tokens) {
    const PcmAudio t = tone(0.25, 200.0 + static_cast<double>(word_hash(word) % 800));
    out.samples.insert(out.samples.end(), t.samples.begin(), t.samples.end());
    out.samples.resize(out.samples.size() + kSampleRate / 20, 0);
  }
  if (out.samples.empty()) out = silence(kSampleRate / 10);
  return out;
}

fid::EvalCondition spoken_condition(const tivgan::Dataset& data, std::string label) {
  std::map<std::string, std::string> transcripts;
  auto recordings = std::make_shared<std::map<std::string, Bytes>>();
  for (const auto& clip : data.clips) {
    if (recordings->count(clip.caption)) continue;
    Bytes wav = encode_wav(speak(clip.caption));
    transcripts[sha256_hex(wav)] = clip.caption;
    (*recordings)[clip.caption] = std::move(wav);
  }
  auto asr = std::make_shared<kwx::MockRecognizer>(std::move(transcripts));
  return {std::move(label), [asr, recordings](const tivgan::Clip& clip) {
            auto it = recordings->find(clip.caption);
            const Bytes wav = it != recordings->end() ? it->second : encode_wav(speak(clip.caption));
            return kwx::transcribe(wav, asr.get());
          }};
}

}  // namespace studio::service
