#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>

#include "studio/error.hpp"
#include "studio/kwx/kwx.hpp"

namespace studio::kwx {

std::string_view to_string(TextSource source) {
  return source == TextSource::typed ? "typed" : "transcribed";
}

std::string NormalizedText::joined() const {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

namespace {

const icu::Normalizer2& nfc() {
  UErrorCode status = U_ZERO_ERROR;
  const icu::Normalizer2* n = icu::Normalizer2::getNFCInstance(status);
  if (U_FAILURE(status) || n == nullptr) throw Error(Errc::adapter_unavailable, "ICU NFC normalizer unavailable");
  return *n;
}

icu::UnicodeString to_nfc(const icu::UnicodeString& text) {
  UErrorCode status = U_ZERO_ERROR;
  icu::UnicodeString out = nfc().normalize(text, status);
  if (U_FAILURE(status)) throw Error(Errc::decode_error, "NFC normalization failed");
  return out;
}

enum class CharClass { keep, drop, split };

CharClass classify(UChar32 c) {
  if (u_isUWhiteSpace(c)) return CharClass::split;
  const auto mask = U_GET_GC_MASK(c);
  if (mask & U_GC_PD_MASK) return CharClass::split;
  if (mask & (U_GC_P_MASK | U_GC_S_MASK | U_GC_CC_MASK | U_GC_CF_MASK)) return CharClass::drop;
  return CharClass::keep;
}

}  // namespace

NormalizedText normalize_text(std::string_view raw, TextSource source) {
  NormalizedText result;
  result.original = std::string(raw);
  result.source = source;

  icu::UnicodeString text = icu::UnicodeString::fromUTF8(icu::StringPiece(raw.data(), static_cast<int32_t>(raw.size())));
  text = to_nfc(text);
  text.toLower(icu::Locale::getRoot());
  text = to_nfc(text);

  icu::UnicodeString current;
  auto flush = [&] {
    if (current.isEmpty()) return;
    std::string token;
    current.toUTF8String(token);
    result.tokens.push_back(std::move(token));
    current.remove();
  };
  for (int32_t i = 0; i < text.length();) {
    const UChar32 c = text.char32At(i);
    i += U16_LENGTH(c);
    switch (classify(c)) {
      case CharClass::keep: current.append(c); break;
      case CharClass::split: flush(); break;
      case CharClass::drop: break;
    }
  }
  flush();
  return result;
}

}  // namespace studio::kwx
