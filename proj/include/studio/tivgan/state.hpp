#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "studio/kwx/kwx.hpp"
#include "studio/tivgan/dataset.hpp"
#include "studio/tivgan/networks.hpp"

namespace studio::tivgan {

template <class T>
struct GenState {
  Architecture arch;
  Vocabulary vocab;
  Networks<T> nets;
  int stage = 0;              // highest trained power-of-two frame count exponent
  std::uint64_t seed = 0;
  std::int64_t iteration = 0;  // total optimizer iterations so far
  std::string config_hash;
  std::string optimizer_rule;

  int frames_at(int m) const { return 1 << m; }
};

// Fresh parameters; depends only on (arch, vocab, seed).
template <class T>
GenState<T> init_state(const Architecture& arch, Vocabulary vocab, std::uint64_t seed) {
  arch.validate();
  GenState<T> s;
  s.arch = arch;
  s.vocab = std::move(vocab);
  s.seed = seed;
  Rng rng(seed);
  s.nets.encoder = TextEncoder<T>::init(arch, s.vocab.size(), rng);
  s.nets.recurrent = Recurrent<T>::init(arch, rng);
  s.nets.generator = Generator<T>::init(arch, rng);
  s.nets.image_disc = Discriminator<T>::init(arch, arch.channels, rng);
  return s;
}

template <class T>
struct TextEmbedding {
  Eigen::Matrix<T, Eigen::Dynamic, 1> phi;
};

template <class T>
Caption caption_ids(const GenState<T>& state, const kwx::NormalizedText& text) {
  return state.vocab.encode(text.tokens);
}

template <class T>
TextEmbedding<T> encode_text(const kwx::NormalizedText& text, const GenState<T>& state) {
  const Mat<T> phi = state.nets.encoder.forward({caption_ids(state, text)}, nullptr);
  return {phi.col(0)};
}

template <class T>
struct NoiseSeed {
  Eigen::Matrix<T, Eigen::Dynamic, 1> z;
};

template <class T>
NoiseSeed<T> sample_noise(const Architecture& arch, Rng& rng) {
  return {gaussian<T>(arch.noise_dim, 1, T(1), rng).col(0)};
}

template <class T>
FeatureMap<T> to_feature_map(const std::vector<const Frame*>& frames) {
  if (frames.empty()) throw Error(Errc::shape_error, "no frames");
  const Frame& first = *frames.front();
  FeatureMap<T> f(first.channels, static_cast<int>(frames.size()), first.height, first.width);
  for (int n = 0; n < f.batch; ++n) {
    const Frame& fr = *frames[n];
    if (fr.height != first.height || fr.width != first.width || fr.channels != first.channels)
      throw Error(Errc::shape_error, "inconsistent frame shapes");
    for (int y = 0; y < fr.height; ++y)
      for (int x = 0; x < fr.width; ++x)
        for (int c = 0; c < fr.channels; ++c) f.at(c, n, y, x) = static_cast<T>(fr.at(y, x, c));
  }
  return f;
}

template <class T>
std::vector<Frame> to_frames(const FeatureMap<T>& f) {
  std::vector<Frame> out;
  out.reserve(f.batch);
  for (int n = 0; n < f.batch; ++n) {
    Frame fr(f.height, f.width, f.channels);
    for (int y = 0; y < f.height; ++y)
      for (int x = 0; x < f.width; ++x)
        for (int c = 0; c < f.channels; ++c) fr.at(y, x, c) = static_cast<float>(f.at(c, n, y, x));
    out.push_back(std::move(fr));
  }
  return out;
}

// G applied to every hidden state R produces, for a batch of items.
template <class T>
struct RolloutCache {
  typename Recurrent<T>::Cache recurrent;
  typename Generator<T>::Cache generator;
  int items = 0;
  int steps = 0;
};

// phi: text_dim x B, z0: noise x B, zs: steps matrices of noise x B. Returns
// B * steps frames, item-major.
template <class T>
FeatureMap<T> rollout(const Networks<T>& nets, const Mat<T>& phi, const Mat<T>& z0, const std::vector<Mat<T>>& zs,
                      RolloutCache<T>* cache) {
  const auto hidden = nets.recurrent.forward(phi, z0, zs, cache != nullptr ? &cache->recurrent : nullptr);
  const auto items = static_cast<int>(phi.cols());
  const auto steps = static_cast<int>(zs.size());
  Mat<T> stacked(hidden.front().rows(), static_cast<Eigen::Index>(items) * steps);
  for (int b = 0; b < items; ++b)
    for (int k = 0; k < steps; ++k) stacked.col(static_cast<Eigen::Index>(b) * steps + k) = hidden[k].col(b);
  if (cache != nullptr) {
    cache->items = items;
    cache->steps = steps;
  }
  return nets.generator.forward(stacked, cache != nullptr ? &cache->generator : nullptr);
}

// Back-propagates a frame gradient through G and R; returns dphi.
template <class T>
Mat<T> rollout_backward(const Networks<T>& nets, const RolloutCache<T>& cache, const FeatureMap<T>& dframes,
                        Networks<T>& grads) {
  const Mat<T> dstacked = nets.generator.backward(cache.generator, dframes, grads.generator);
  std::vector<Mat<T>> dhidden(cache.steps, Mat<T>(dstacked.rows(), cache.items));
  for (int b = 0; b < cache.items; ++b)
    for (int k = 0; k < cache.steps; ++k) dhidden[k].col(b) = dstacked.col(static_cast<Eigen::Index>(b) * cache.steps + k);
  return nets.recurrent.backward(cache.recurrent, dhidden, grads.recurrent);
}

// Emits exactly 2^m frames for one caption embedding.
template <class T>
FrameSequence generate_frames(const GenState<T>& state, const TextEmbedding<T>& phi, const NoiseSeed<T>& z0,
                              const std::vector<NoiseSeed<T>>& zs, int m, double fps = 8.0) {
  if (m < 0 || m > state.stage)
    throw Error(Errc::stage_exceeded, "requested stage " + std::to_string(m) + " but state is at stage " +
                                          std::to_string(state.stage));
  if (static_cast<int>(zs.size()) != (1 << m))
    throw Error(Errc::shape_error, "stage " + std::to_string(m) + " needs " + std::to_string(1 << m) +
                                       " noise seeds, got " + std::to_string(zs.size()));
  if (phi.phi.size() != state.arch.text_dim || z0.z.size() != state.arch.noise_dim)
    throw Error(Errc::shape_error, "embedding or noise dimension mismatch");
  std::vector<Mat<T>> steps;
  for (const auto& z : zs) {
    if (z.z.size() != state.arch.noise_dim) throw Error(Errc::shape_error, "noise dimension mismatch");
    steps.push_back(z.z);
  }
  const FeatureMap<T> frames = rollout<T>(state.nets, Mat<T>(phi.phi), Mat<T>(z0.z), steps, nullptr);
  return FrameSequence{to_frames(frames), fps};
}

}  // namespace studio::tivgan
