#include <nlohmann/json.hpp>

#include "studio/error.hpp"
#include "studio/hash.hpp"
#include "studio/io.hpp"
#include "studio/kwx/kwx.hpp"
#include "studio/wav.hpp"

namespace studio::kwx {

MockRecognizer::MockRecognizer(std::map<std::string, std::string> transcripts)
    : transcripts_(std::move(transcripts)) {}

std::unique_ptr<MockRecognizer> MockRecognizer::from_json_file(const std::filesystem::path& path) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::config_error, "bad ASR lookup file " + path.string() + ": " + e.what());
  }
  if (!doc.is_object()) throw Error(Errc::config_error, "ASR lookup file must be a JSON object");
  std::map<std::string, std::string> table;
  for (const auto& [key, value] : doc.items()) table.emplace(key, value.get<std::string>());
  return std::make_unique<MockRecognizer>(std::move(table));
}

std::string MockRecognizer::recognize(std::span<const std::uint8_t> wav_bytes) {
  const std::string key = sha256_hex(wav_bytes);
  auto it = transcripts_.find(key);
  if (it == transcripts_.end()) throw Error(Errc::adapter_error, "mock ASR has no transcript for audio " + key);
  return it->second;
}

NormalizedText transcribe(std::span<const std::uint8_t> wav_bytes, SpeechRecognizer* asr) {
  if (asr == nullptr) throw Error(Errc::adapter_unavailable, "no speech recognizer configured");
  (void)decode_wav(wav_bytes);
  return normalize_text(asr->recognize(wav_bytes), TextSource::transcribed);
}

}  // namespace studio::kwx
