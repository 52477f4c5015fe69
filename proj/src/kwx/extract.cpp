#include <algorithm>
#include <array>
#include <unordered_map>

#include "studio/kwx/kwx.hpp"

namespace studio::kwx {

namespace {

// Sorted; is_stopword relies on binary search.
constexpr std::array<std::string_view, 130> kStopwords = {
    "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and", "any",
    "are", "as", "at", "be", "because", "been", "before", "being", "below", "between", "both",
    "but", "by", "can", "could", "did", "do", "does", "doing", "down", "during", "each", "few",
    "for", "from", "further", "had", "has", "have", "having", "he", "her", "here", "hers",
    "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "it", "its", "itself",
    "just", "may", "me", "might", "more", "most", "must", "my", "myself", "no", "nor", "not", "now",
    "of", "off", "on", "once", "only", "or", "other", "our", "ours", "ourselves", "out", "over",
    "own", "same", "shall", "she", "should", "so", "some", "such", "than", "that", "the", "their",
    "theirs", "them", "then", "there", "these", "they", "this", "those", "through", "to", "too",
    "under", "until", "up", "very", "was", "we", "were", "what", "when", "where", "which", "while",
    "who", "whom", "why", "will", "with", "would", "you", "your", "yours", "yourself", "yourselves",
};

constexpr bool sorted_unique() {
  for (std::size_t i = 1; i < kStopwords.size(); ++i)
    if (!(kStopwords[i - 1] < kStopwords[i])) return false;
  return true;
}
static_assert(sorted_unique());

}  // namespace

std::span<const std::string_view> stopwords() { return kStopwords; }

bool is_stopword(std::string_view token) {
  return std::binary_search(kStopwords.begin(), kStopwords.end(), token);
}

TermList FrequencyExtractor::extract(const NormalizedText& text, int max_terms) const {
  struct Tally {
    std::string term;
    int count = 0;
    std::size_t first = 0;
  };
  std::vector<Tally> tallies;
  std::unordered_map<std::string, std::size_t> slot;
  for (std::size_t i = 0; i < text.tokens.size(); ++i) {
    const std::string& tok = text.tokens[i];
    if (is_stopword(tok)) continue;
    auto [it, inserted] = slot.emplace(tok, tallies.size());
    if (inserted) tallies.push_back({tok, 0, i});
    ++tallies[it->second].count;
  }
  std::stable_sort(tallies.begin(), tallies.end(), [](const Tally& a, const Tally& b) {
    if (a.count != b.count) return a.count > b.count;
    if (a.first != b.first) return a.first < b.first;
    return a.term < b.term;
  });
  TermList out;
  const auto limit = static_cast<std::size_t>(std::max(max_terms, 0));
  for (std::size_t i = 0; i < tallies.size() && i < limit; ++i)
    out.terms.push_back({tallies[i].term, static_cast<double>(tallies[i].count), static_cast<int>(i) + 1});
  return out;
}

TermList extract_terms(const NormalizedText& text, int max_terms) {
  return FrequencyExtractor{}.extract(text, max_terms);
}

}  // namespace studio::kwx
