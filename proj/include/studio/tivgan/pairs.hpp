#pragma once

#include <random>
#include <set>
#include <vector>

#include "studio/tivgan/losses.hpp"

namespace studio::tivgan {

// Noise that produced a fake leg, kept so the generator pass can be replayed
// with caches for back-propagation.
template <class T>
struct NoiseDraw {
  Mat<T> z0;
  std::vector<Mat<T>> zs;
};

template <class T>
NoiseDraw<T> draw_noise(const Architecture& arch, int items, int steps, Rng& rng) {
  NoiseDraw<T> draw;
  draw.z0 = gaussian<T>(arch.noise_dim, items, T(1), rng);
  for (int k = 0; k < steps; ++k) draw.zs.push_back(gaussian<T>(arch.noise_dim, items, T(1), rng));
  return draw;
}

inline int uniform_index(int n, Rng& rng) { return std::uniform_int_distribution<int>(0, n - 1)(rng); }

// Builds real / fake / wrong legs for the given batch clips at stage m. The
// real leg is a uniformly placed window of 2^m consecutive frames; the fake
// leg is generated from the same caption; the wrong leg pairs the real frames
// with the caption of a uniformly chosen other batch item whose caption
// differs. `noise` and `rollout_cache` expose the fake leg's provenance.
template <class T>
PairBatch<T> make_pairs(const std::vector<const Clip*>& clips, const GenState<T>& state, int m, Rng& rng,
                        NoiseDraw<T>* noise = nullptr, RolloutCache<T>* rollout_cache = nullptr) {
  const int K = 1 << m;
  const int B = static_cast<int>(clips.size());
  std::set<std::string> distinct;
  for (const Clip* c : clips) {
    if (static_cast<int>(c->frames.size()) < K)
      throw Error(Errc::insufficient_data, "clip has " + std::to_string(c->frames.size()) + " frames, stage " +
                                               std::to_string(m) + " needs " + std::to_string(K));
    distinct.insert(c->caption);
  }
  if (distinct.size() < 2) throw Error(Errc::insufficient_data, "need at least two distinct captions in the batch");

  PairBatch<T> batch;
  batch.frames_per_item = K;
  std::vector<const Frame*> real_frames;
  real_frames.reserve(static_cast<std::size_t>(B) * K);
  std::vector<int> candidates;
  for (int b = 0; b < B; ++b) {
    const Clip& clip = *clips[b];
    const int start = uniform_index(static_cast<int>(clip.frames.size()) - K + 1, rng);
    for (int k = 0; k < K; ++k) real_frames.push_back(&clip.frames[start + k]);
    candidates.clear();
    for (int o = 0; o < B; ++o)
      if (o != b && clips[o]->caption != clip.caption) candidates.push_back(o);
    const Clip& wrong = *clips[candidates[uniform_index(static_cast<int>(candidates.size()), rng)]];
    batch.caption_text.push_back(clip.caption);
    batch.wrong_text.push_back(wrong.caption);
    batch.captions.push_back(state.vocab.encode(kwx::normalize_text(clip.caption).tokens));
    batch.wrong_captions.push_back(state.vocab.encode(kwx::normalize_text(wrong.caption).tokens));
  }
  batch.real = to_feature_map<T>(real_frames);

  NoiseDraw<T> draw = draw_noise<T>(state.arch, B, K, rng);
  const Mat<T> phi = state.nets.encoder.forward(batch.captions, nullptr);
  batch.fake = rollout<T>(state.nets, phi, draw.z0, draw.zs, rollout_cache);
  if (noise != nullptr) *noise = std::move(draw);
  return batch;
}

}  // namespace studio::tivgan
