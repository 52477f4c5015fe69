#pragma once

// Small architecture and random batches shared by the loss and init checks.

#include <random>
#include <string>
#include <vector>

#include "studio/tivgan/train.hpp"

namespace tiny_model {

using namespace studio::tivgan;

inline Architecture tiny_arch() {
  Architecture a;
  a.image_size = 8;
  a.channels = 3;
  a.noise_dim = 4;
  a.text_dim = 5;
  a.hidden_dim = 6;
  a.embed_dim = 4;
  a.gen_base = 4;
  a.disc_base = 4;
  a.cond_dim = 3;
  return a;
}

inline const std::vector<std::string> kWords = {"red", "blue", "circle", "square", "moving", "left", "right"};

template <class T>
GenState<T> tiny_state(std::uint64_t seed = 5) {
  return init_state<T>(tiny_arch(), Vocabulary(kWords), seed);
}

template <class T>
void randomize(Discriminator<T>& d, Rng& rng, double scale = 0.3) {
  NamedParams<T> params;
  d.collect(params, "d");
  for (auto& [name, m] : params) *m = gaussian<T>(m->rows(), m->cols(), static_cast<T>(scale), rng);
}

inline FeatureMap<double> uniform_map(int c, int n, int h, int w, Rng& rng) {
  FeatureMap<double> f(c, n, h, w);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (Eigen::Index i = 0; i < f.data.size(); ++i) f.data.data()[i] = u(rng);
  return f;
}

inline Caption random_caption(int vocab, Rng& rng) {
  Caption c(std::uniform_int_distribution<int>(0, 4)(rng));
  for (auto& id : c) id = uniform_index(vocab, rng);
  return c;
}

inline PairBatch<double> random_batch(const GenState<double>& s, int items, int K, Rng& rng) {
  PairBatch<double> b;
  b.frames_per_item = K;
  const int size = s.arch.image_size;
  b.real = uniform_map(s.arch.channels, items * K, size, size, rng);
  b.fake = uniform_map(s.arch.channels, items * K, size, size, rng);
  for (int i = 0; i < items; ++i) {
    b.captions.push_back(random_caption(s.vocab.size(), rng));
    b.wrong_captions.push_back(random_caption(s.vocab.size(), rng));
  }
  return b;
}

}  // namespace tiny_model
