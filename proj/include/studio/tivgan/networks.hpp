#pragma once

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "studio/tivgan/layers.hpp"

namespace studio::tivgan {

// Network sizes. Frames are image_size x image_size x channels; the generator
// upsamples from 4x4 and the discriminators downsample back to 4x4, so
// image_size must be 4 * 2^k with k >= 1.
struct Architecture {
  int image_size = 32;
  int channels = 3;
  int noise_dim = 32;
  int text_dim = 64;
  int hidden_dim = 128;
  int embed_dim = 32;
  int gen_base = 16;
  int disc_base = 16;
  int cond_dim = 16;

  int resample_blocks() const {
    int blocks = 0;
    for (int s = image_size; s > 4; s /= 2) ++blocks;
    return blocks;
  }
  int gen_channels(int level) const { return gen_base << (resample_blocks() - 1 - level); }
  int disc_channels(int level) const { return disc_base << level; }
  int disc_features() const { return disc_channels(resample_blocks() - 1); }

  void validate() const {
    int s = image_size;
    while (s > 4 && s % 2 == 0) s /= 2;
    if (s != 4 || image_size < 8)
      throw Error(Errc::config_error, "image_size must be 4 * 2^k, k >= 1; got " + std::to_string(image_size));
    if (channels < 1 || noise_dim < 1 || text_dim < 1 || hidden_dim < 1 || embed_dim < 1 || gen_base < 1 ||
        disc_base < 1 || cond_dim < 1)
      throw Error(Errc::config_error, "architecture dimensions must be positive");
  }

  bool operator==(const Architecture&) const = default;
};

// Caption vocabulary. Id 0 is the out-of-vocabulary slot.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::vector<std::string> words) : words_(std::move(words)) {
    std::sort(words_.begin(), words_.end());
    words_.erase(std::unique(words_.begin(), words_.end()), words_.end());
  }

  int size() const { return static_cast<int>(words_.size()) + 1; }
  int id(const std::string& token) const {
    auto it = std::lower_bound(words_.begin(), words_.end(), token);
    return (it != words_.end() && *it == token) ? static_cast<int>(it - words_.begin()) + 1 : 0;
  }
  std::vector<int> encode(const std::vector<std::string>& tokens) const {
    std::vector<int> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(id(t));
    return ids;
  }
  const std::vector<std::string>& words() const { return words_; }
  bool operator==(const Vocabulary&) const = default;

 private:
  std::vector<std::string> words_;
};

using Caption = std::vector<int>;  // token ids

// Mean of learned token vectors followed by a learned linear map. An empty
// caption pools the OOV vector alone.
template <class T>
struct TextEncoder {
  Mat<T> embedding;  // vocab x embed
  Dense<T> project;

  struct Cache {
    std::vector<Caption> captions;
    Mat<T> pooled;
  };

  static TextEncoder init(const Architecture& a, int vocab_size, Rng& rng) {
    TextEncoder e;
    e.embedding = gaussian<T>(vocab_size, a.embed_dim, T(1), rng);
    e.project = Dense<T>::init(a.embed_dim, a.text_dim, rng);
    return e;
  }

  Mat<T> pool(const std::vector<Caption>& captions) const {
    Mat<T> pooled = Mat<T>::Zero(embedding.cols(), static_cast<Eigen::Index>(captions.size()));
    for (std::size_t n = 0; n < captions.size(); ++n) {
      const auto& cap = captions[n];
      if (cap.empty()) {
        pooled.col(n) = embedding.row(0).transpose();
        continue;
      }
      for (int id : cap) pooled.col(n) += embedding.row(id).transpose();
      pooled.col(n) /= static_cast<T>(cap.size());
    }
    return pooled;
  }

  Mat<T> forward(const std::vector<Caption>& captions, Cache* cache) const {
    Mat<T> pooled = pool(captions);
    Mat<T> phi = project.forward(pooled);
    if (cache != nullptr) *cache = Cache{captions, std::move(pooled)};
    return phi;
  }

  void backward(const Cache& cache, const Mat<T>& dphi, TextEncoder& grad) const {
    const Mat<T> dpooled = project.backward(cache.pooled, dphi, grad.project);
    for (std::size_t n = 0; n < cache.captions.size(); ++n) {
      const auto& cap = cache.captions[n];
      if (cap.empty()) {
        grad.embedding.row(0) += dpooled.col(n).transpose();
        continue;
      }
      const T scale = T(1) / static_cast<T>(cap.size());
      for (int id : cap) grad.embedding.row(id) += scale * dpooled.col(n).transpose();
    }
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    out.emplace_back(prefix + ".embedding", &embedding);
    project.collect(out, prefix + ".project");
  }
};

// R: the initial hidden state is tanh(W z0 + b); step k consumes [phi; z_k].
template <class T>
struct Recurrent {
  Dense<T> initial;
  GRUCell<T> cell;

  struct Cache {
    Mat<T> z0;
    Mat<T> h0;
    std::vector<typename GRUCell<T>::Cache> steps;
  };

  static Recurrent init(const Architecture& a, Rng& rng) {
    Recurrent r;
    r.initial = Dense<T>::init(a.noise_dim, a.hidden_dim, rng);
    r.cell = GRUCell<T>::init(a.text_dim + a.noise_dim, a.hidden_dim, rng);
    return r;
  }

  std::vector<Mat<T>> forward(const Mat<T>& phi, const Mat<T>& z0, const std::vector<Mat<T>>& zs, Cache* cache) const {
    Mat<T> h = initial.forward(z0).array().tanh().matrix();
    if (cache != nullptr) {
      cache->z0 = z0;
      cache->h0 = h;
      cache->steps.assign(zs.size(), {});
    }
    std::vector<Mat<T>> hidden;
    hidden.reserve(zs.size());
    Mat<T> input(phi.rows() + zs.front().rows(), phi.cols());
    input.topRows(phi.rows()) = phi;
    for (std::size_t k = 0; k < zs.size(); ++k) {
      input.bottomRows(zs[k].rows()) = zs[k];
      h = cell.forward(input, h, cache != nullptr ? &cache->steps[k] : nullptr);
      hidden.push_back(h);
    }
    return hidden;
  }

  // dhidden[k] is the loss gradient arriving at output step k; returns dphi.
  Mat<T> backward(const Cache& cache, const std::vector<Mat<T>>& dhidden, Recurrent& grad) const {
    const Eigen::Index text_rows = cell.input_size() - initial.in_features();
    Mat<T> dphi = Mat<T>::Zero(text_rows, dhidden.front().cols());
    Mat<T> carry = Mat<T>::Zero(dhidden.front().rows(), dhidden.front().cols());
    for (std::size_t k = dhidden.size(); k-- > 0;) {
      Mat<T> dx, dh;
      cell.backward(cache.steps[k], dhidden[k] + carry, grad.cell, dx, dh);
      dphi += dx.topRows(text_rows);
      carry = std::move(dh);
    }
    const Mat<T> dpre = carry.cwiseProduct(
        (Mat<T>::Ones(cache.h0.rows(), cache.h0.cols()) - cache.h0.cwiseProduct(cache.h0)));
    initial.backward(cache.z0, dpre, grad.initial);
    return dphi;
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    initial.collect(out, prefix + ".initial");
    cell.collect(out, prefix + ".cell");
  }
};

// G: hidden state -> dense -> 4x4 map -> transposed-conv upsampling -> tanh frame.
template <class T>
struct Generator {
  Dense<T> project;
  std::vector<ConvTranspose2d<T>> ups;
  int seed_channels = 0;

  struct Cache {
    Mat<T> input;
    Mat<T> projected;  // after ReLU
    std::vector<typename ConvTranspose2d<T>::Cache> ups;
    std::vector<FeatureMap<T>> outputs;  // post-activation per upsampling layer
  };

  static Generator init(const Architecture& a, Rng& rng) {
    Generator g;
    const int L = a.resample_blocks();
    g.seed_channels = a.gen_channels(0);
    g.project = Dense<T>::init(a.hidden_dim, g.seed_channels * 16, rng);
    for (int i = 0; i < L; ++i) {
      const int in = a.gen_channels(i);
      const int out = (i + 1 < L) ? a.gen_channels(i + 1) : a.channels;
      g.ups.push_back(ConvTranspose2d<T>::init(in, out, Window{4, 2, 1}, rng));
    }
    return g;
  }

  FeatureMap<T> forward(const Mat<T>& h, Cache* cache) const {
    Mat<T> projected = relu<T>(project.forward(h));
    FeatureMap<T> x = unflatten<T>(projected, seed_channels, 4, 4);
    if (cache != nullptr) {
      cache->input = h;
      cache->projected = projected;
      cache->ups.assign(ups.size(), {});
      cache->outputs.clear();
    }
    for (std::size_t i = 0; i < ups.size(); ++i) {
      x = ups[i].forward(x, cache != nullptr ? &cache->ups[i] : nullptr);
      if (i + 1 < ups.size())
        x.data = relu<T>(x.data);
      else
        x.data = x.data.array().tanh().matrix();
      if (cache != nullptr) cache->outputs.push_back(x);
    }
    return x;
  }

  Mat<T> backward(const Cache& cache, const FeatureMap<T>& dframes, Generator& grad) const {
    FeatureMap<T> d = dframes;
    for (std::size_t i = ups.size(); i-- > 0;) {
      const Mat<T>& y = cache.outputs[i].data;
      if (i + 1 < ups.size())
        d.data = relu_backward<T>(y, d.data);
      else
        d.data = d.data.cwiseProduct(Mat<T>::Ones(y.rows(), y.cols()) - y.cwiseProduct(y));
      d = ups[i].backward(cache.ups[i], d, grad.ups[i]);
    }
    const Mat<T> dprojected = relu_backward<T>(cache.projected, flatten(d));
    return project.backward(cache.input, dprojected, grad.project);
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    project.collect(out, prefix + ".project");
    for (std::size_t i = 0; i < ups.size(); ++i) ups[i].collect(out, prefix + ".up" + std::to_string(i));
  }
};

// Strided-conv trunk shared by two heads: an unconditional realism head and a
// conditional head that concatenates the projected text embedding onto the
// final 4x4 feature map.
template <class T>
struct Discriminator {
  std::vector<Conv2d<T>> trunk;
  Dense<T> plain_head;
  Dense<T> text_project;
  Conv2d<T> joint_mix;
  Dense<T> joint_head;

  struct TrunkCache {
    std::vector<typename Conv2d<T>::Cache> convs;
    std::vector<FeatureMap<T>> outputs;
  };
  struct PlainCache {
    Mat<T> features;
  };
  struct JointCache {
    Mat<T> phi;
    Mat<T> text;  // post-activation projection
    typename Conv2d<T>::Cache mix;
    FeatureMap<T> mixed;  // post-activation
    Mat<T> mixed_flat;
  };

  static Discriminator init(const Architecture& a, int input_channels, Rng& rng) {
    Discriminator d;
    const int L = a.resample_blocks();
    int in = input_channels;
    for (int i = 0; i < L; ++i) {
      d.trunk.push_back(Conv2d<T>::init(in, a.disc_channels(i), Window{4, 2, 1}, rng));
      in = a.disc_channels(i);
    }
    const int F = a.disc_features();
    d.plain_head = Dense<T>::init(F * 16, 1, rng);
    d.text_project = Dense<T>::init(a.text_dim, a.cond_dim, rng);
    d.joint_mix = Conv2d<T>::init(F + a.cond_dim, F, Window{1, 1, 0}, rng);
    d.joint_head = Dense<T>::init(F * 16, 1, rng);
    return d;
  }

  int input_channels() const { return trunk.front().in_channels; }

  FeatureMap<T> trunk_forward(const FeatureMap<T>& x, TrunkCache* cache) const {
    FeatureMap<T> h = x;
    if (cache != nullptr) {
      cache->convs.assign(trunk.size(), {});
      cache->outputs.clear();
    }
    for (std::size_t i = 0; i < trunk.size(); ++i) {
      h = trunk[i].forward(h, cache != nullptr ? &cache->convs[i] : nullptr);
      h.data = leaky_relu<T>(h.data);
      if (cache != nullptr) cache->outputs.push_back(h);
    }
    return h;
  }

  FeatureMap<T> trunk_backward(const TrunkCache& cache, const FeatureMap<T>& dfeatures, Discriminator& grad) const {
    FeatureMap<T> d = dfeatures;
    for (std::size_t i = trunk.size(); i-- > 0;) {
      d.data = leaky_relu_backward<T>(cache.outputs[i].data, d.data);
      d = trunk[i].backward(cache.convs[i], d, grad.trunk[i]);
    }
    return d;
  }

  Mat<T> plain_forward(const FeatureMap<T>& features, PlainCache* cache) const {
    Mat<T> flat = flatten(features);
    Mat<T> logits = plain_head.forward(flat);
    if (cache != nullptr) cache->features = std::move(flat);
    return logits;
  }

  void plain_backward(const PlainCache& cache, const Mat<T>& dlogits, Discriminator& grad,
                      FeatureMap<T>& dfeatures) const {
    const Mat<T> dflat = plain_head.backward(cache.features, dlogits, grad.plain_head);
    dfeatures.data += unflatten<T>(dflat, dfeatures.channels, dfeatures.height, dfeatures.width).data;
  }

  Mat<T> joint_forward(const FeatureMap<T>& features, const Mat<T>& phi, JointCache* cache) const {
    const Mat<T> text = leaky_relu<T>(text_project.forward(phi));
    const int cd = static_cast<int>(text.rows());
    const int p = features.plane();
    FeatureMap<T> joined(features.channels + cd, features.batch, features.height, features.width);
    joined.data.topRows(features.channels) = features.data;
    for (int c = 0; c < cd; ++c)
      for (int n = 0; n < features.batch; ++n)
        joined.data.row(features.channels + c).segment(static_cast<Eigen::Index>(n) * p, p).setConstant(text(c, n));
    typename Conv2d<T>::Cache mix_cache;
    FeatureMap<T> mixed = joint_mix.forward(joined, cache != nullptr ? &mix_cache : nullptr);
    mixed.data = leaky_relu<T>(mixed.data);
    Mat<T> flat = flatten(mixed);
    Mat<T> logits = joint_head.forward(flat);
    if (cache != nullptr) *cache = JointCache{phi, text, std::move(mix_cache), std::move(mixed), std::move(flat)};
    return logits;
  }

  // Accumulates into dfeatures and returns dphi.
  Mat<T> joint_backward(const JointCache& cache, const Mat<T>& dlogits, Discriminator& grad,
                        FeatureMap<T>& dfeatures) const {
    const Mat<T> dflat = joint_head.backward(cache.mixed_flat, dlogits, grad.joint_head);
    FeatureMap<T> dmixed = unflatten<T>(dflat, cache.mixed.channels, cache.mixed.height, cache.mixed.width);
    dmixed.data = leaky_relu_backward<T>(cache.mixed.data, dmixed.data);
    const FeatureMap<T> djoined = joint_mix.backward(cache.mix, dmixed, grad.joint_mix);
    dfeatures.data += djoined.data.topRows(dfeatures.channels);
    const int cd = static_cast<int>(cache.text.rows());
    const int p = dfeatures.plane();
    Mat<T> dtext(cd, dfeatures.batch);
    for (int c = 0; c < cd; ++c)
      for (int n = 0; n < dfeatures.batch; ++n)
        dtext(c, n) = djoined.data.row(dfeatures.channels + c).segment(static_cast<Eigen::Index>(n) * p, p).sum();
    const Mat<T> dtext_pre = leaky_relu_backward<T>(cache.text, dtext);
    return text_project.backward(cache.phi, dtext_pre, grad.text_project);
  }

  void collect(NamedParams<T>& out, const std::string& prefix) {
    for (std::size_t i = 0; i < trunk.size(); ++i) trunk[i].collect(out, prefix + ".conv" + std::to_string(i));
    plain_head.collect(out, prefix + ".plain_head");
    text_project.collect(out, prefix + ".text_project");
    joint_mix.collect(out, prefix + ".joint_mix");
    joint_head.collect(out, prefix + ".joint_head");
  }
};

// All learnable parameters. Gradients and optimizer moments reuse this type.
template <class T>
struct Networks {
  TextEncoder<T> encoder;
  Recurrent<T> recurrent;
  Generator<T> generator;
  Discriminator<T> image_disc;
  std::vector<Discriminator<T>> step_discs;  // step_discs[m-1] judges 2^m-frame blocks

  NamedParams<T> named() {
    NamedParams<T> out;
    encoder.collect(out, "encoder");
    recurrent.collect(out, "recurrent");
    generator.collect(out, "generator");
    image_disc.collect(out, "image_disc");
    for (std::size_t i = 0; i < step_discs.size(); ++i)
      step_discs[i].collect(out, "step_disc" + std::to_string(i + 1));
    return out;
  }

  Networks zeros_like() const {
    Networks z = *this;
    for (auto& [name, m] : z.named()) m->setZero();
    return z;
  }

  std::size_t parameter_count() const {
    std::size_t total = 0;
    for (auto& [name, m] : const_cast<Networks*>(this)->named()) total += static_cast<std::size_t>(m->size());
    return total;
  }
};

}  // namespace studio::tivgan
