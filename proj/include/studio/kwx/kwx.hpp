#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace studio::kwx {

enum class TextSource { typed, transcribed };

std::string_view to_string(TextSource source);

struct NormalizedText {
  std::string original;
  std::vector<std::string> tokens;  // lowercase, punctuation-free, non-empty
  TextSource source = TextSource::typed;

  std::string joined() const;  // tokens separated by single spaces
  bool operator==(const NormalizedText&) const = default;
};

// NFC-normalizes, lowercases, deletes punctuation and symbols (dash punctuation
// splits words instead), and splits on whitespace.
NormalizedText normalize_text(std::string_view raw, TextSource source = TextSource::typed);

struct Term {
  std::string term;
  double score = 0.0;
  int rank = 0;  // 1-based
  bool operator==(const Term&) const = default;
};

struct TermList {
  std::vector<Term> terms;
  bool operator==(const TermList&) const = default;
};

// Built-in English function words, sorted. Version bumps whenever the list changes.
inline constexpr int kStopwordListVersion = 1;
std::span<const std::string_view> stopwords();
bool is_stopword(std::string_view token);

class TermExtractor {
 public:
  virtual ~TermExtractor() = default;
  virtual TermList extract(const NormalizedText& text, int max_terms) const = 0;
};

// Frequency scorer: stopwords dropped, score = token frequency, ties broken by
// first occurrence then lexicographically.
class FrequencyExtractor final : public TermExtractor {
 public:
  TermList extract(const NormalizedText& text, int max_terms) const override;
};

TermList extract_terms(const NormalizedText& text, int max_terms);

// Speech-to-text seam. Input is a WAV byte stream (PCM 16-bit mono 16 kHz).
class SpeechRecognizer {
 public:
  virtual ~SpeechRecognizer() = default;
  virtual std::string recognize(std::span<const std::uint8_t> wav_bytes) = 0;
};

// Lookup-table recognizer keyed by the SHA-256 of the audio bytes.
class MockRecognizer final : public SpeechRecognizer {
 public:
  explicit MockRecognizer(std::map<std::string, std::string> transcripts);
  static std::unique_ptr<MockRecognizer> from_json_file(const std::filesystem::path& path);

  std::string recognize(std::span<const std::uint8_t> wav_bytes) override;

 private:
  std::map<std::string, std::string> transcripts_;
};

// Throws AdapterUnavailable when `asr` is null and DecodeError on malformed audio.
NormalizedText transcribe(std::span<const std::uint8_t> wav_bytes, SpeechRecognizer* asr);

}  // namespace studio::kwx
