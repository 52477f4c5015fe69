#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "studio/catalog/catalog.hpp"
#include "studio/fid/fid.hpp"
#include "studio/tivgan/state.hpp"
#include "studio/wav.hpp"

namespace studio::service {

// Sentence used by the demo catalog: "The water cycle moves water ..."
std::string fixture_sentence();

struct SeedTerm {
  std::string term;
  int images = 0;
  double audio_seconds = 0.0;  // 0 means no clip
};

std::vector<SeedTerm> fixture_terms();

// Fills a catalog with procedural library images and tone clips for
// fixture_terms(). Deterministic in `seed`.
void seed_catalog(catalog::Catalog& catalog, std::uint64_t seed = 3);

// Deterministic stand-in for recorded speech: one short tone per word, pitch
// derived from the word's hash.
PcmAudio speak(std::string_view text);

// Evaluation condition whose conditioning text comes from speaking each
// caption and transcribing it through a mock recognizer.
fid::EvalCondition spoken_condition(const tivgan::Dataset& data, std::string label = "With text and sound");

// Generated frames for `term`, stored with origin=generated.
template <class T>
std::vector<std::string> add_generated_candidates(catalog::Catalog& catalog, const tivgan::GenState<T>& state,
                                                  const std::string& term, int count, std::uint64_t seed) {
  tivgan::Rng rng(seed);
  const auto phi = tivgan::encode_text(kwx::normalize_text(term), state);
  const catalog::IdentityEnhancer enhancer;
  std::vector<std::string> ids;
  for (int i = 0; i < count; ++i) {
    const auto z0 = tivgan::sample_noise<T>(state.arch, rng);
    std::vector<tivgan::NoiseSeed<T>> zs{tivgan::sample_noise<T>(state.arch, rng)};
    const auto seq = tivgan::generate_frames(state, phi, z0, zs, 0);
    ids.push_back(catalog::put_generated(catalog, term, tivgan::image_from_frame(seq.frames.front()), enhancer));
  }
  return ids;
}

}  // namespace studio::service
