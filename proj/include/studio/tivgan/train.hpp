#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <string>
#include <vector>

#include "studio/hash.hpp"
#include "studio/tivgan/pairs.hpp"

namespace studio::tivgan {

struct TrainConfig {
  Architecture arch;
  int batch_size = 16;
  int stage1_iterations = 2000;
  std::vector<int> stage_iterations = {300, 300, 300};  // evolutionary budget for m = 1..n
  int stages = 3;                                        // n
  double lr_generator = 2e-4;
  double lr_discriminator = 2e-4;
  double beta2 = 0.99;
  double adam_epsilon = 1e-8;
  std::uint64_t seed = 1;
  std::string dataset_path;

  int iterations_for_stage(int m) const {
    if (m <= 0) return stage1_iterations;
    if (stage_iterations.empty()) return 0;
    return stage_iterations[std::min<std::size_t>(m - 1, stage_iterations.size() - 1)];
  }

  void validate() const {
    arch.validate();
    if (batch_size < 2) throw Error(Errc::config_error, "batch_size must be at least 2");
    if (stage1_iterations < 0) throw Error(Errc::config_error, "stage1_iterations must be non-negative");
    for (int it : stage_iterations)
      if (it < 0) throw Error(Errc::config_error, "stage_iterations must be non-negative");
    if (stages < 0) throw Error(Errc::config_error, "stages must be non-negative");
    if (!(lr_generator > 0) || !(lr_discriminator > 0)) throw Error(Errc::config_error, "learning rates must be positive");
    if (!(beta2 > 0 && beta2 < 1) || !(adam_epsilon > 0)) throw Error(Errc::config_error, "invalid optimizer constants");
  }

  // Human-readable update rule, recorded in checkpoint metadata.
  std::string optimizer_rule() const {
    return "adaptive-rms(beta1=0, beta2=" + std::to_string(beta2) + ", eps=" + std::to_string(adam_epsilon) +
           "): v = beta2*v + (1-beta2)*g^2; p -= lr * g / (sqrt(v / (1 - beta2^t)) + eps)";
  }
};

inline void to_json(nlohmann::json& j, const Architecture& a) {
  j = nlohmann::json{{"image_size", a.image_size}, {"channels", a.channels},   {"noise_dim", a.noise_dim},
                     {"text_dim", a.text_dim},     {"hidden_dim", a.hidden_dim}, {"embed_dim", a.embed_dim},
                     {"gen_base", a.gen_base},     {"disc_base", a.disc_base}, {"cond_dim", a.cond_dim}};
}

inline void from_json(const nlohmann::json& j, Architecture& a) {
  a.image_size = j.value("image_size", a.image_size);
  a.channels = j.value("channels", a.channels);
  a.noise_dim = j.value("noise_dim", a.noise_dim);
  a.text_dim = j.value("text_dim", a.text_dim);
  a.hidden_dim = j.value("hidden_dim", a.hidden_dim);
  a.embed_dim = j.value("embed_dim", a.embed_dim);
  a.gen_base = j.value("gen_base", a.gen_base);
  a.disc_base = j.value("disc_base", a.disc_base);
  a.cond_dim = j.value("cond_dim", a.cond_dim);
}

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = nlohmann::json{{"arch", c.arch},
                     {"batch_size", c.batch_size},
                     {"stage1_iterations", c.stage1_iterations},
                     {"stage_iterations", c.stage_iterations},
                     {"stages", c.stages},
                     {"lr_generator", c.lr_generator},
                     {"lr_discriminator", c.lr_discriminator},
                     {"beta2", c.beta2},
                     {"adam_epsilon", c.adam_epsilon},
                     {"seed", c.seed},
                     {"dataset_path", c.dataset_path}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  if (j.contains("arch")) c.arch = j.at("arch").get<Architecture>();
  c.batch_size = j.value("batch_size", c.batch_size);
  c.stage1_iterations = j.value("stage1_iterations", c.stage1_iterations);
  c.stage_iterations = j.value("stage_iterations", c.stage_iterations);
  c.stages = j.value("stages", c.stages);
  c.lr_generator = j.value("lr_generator", c.lr_generator);
  c.lr_discriminator = j.value("lr_discriminator", c.lr_discriminator);
  c.beta2 = j.value("beta2", c.beta2);
  c.adam_epsilon = j.value("adam_epsilon", c.adam_epsilon);
  c.seed = j.value("seed", c.seed);
  c.dataset_path = j.value("dataset_path", c.dataset_path);
}

inline std::string config_hash(const TrainConfig& c) {
  nlohmann::json j = c;
  j.erase("dataset_path");
  return sha256_hex(j.dump());
}

// Momentum-free adaptive update (Adam with beta1 = 0). Second moments live in
// a Networks-shaped mirror of the parameters; each parameter tensor keeps its
// own step count so newly added step discriminators start unbiased.
template <class T>
class AdaptiveOptimizer {
 public:
  AdaptiveOptimizer(double beta2, double epsilon) : beta2_(beta2), epsilon_(epsilon) {}

  // Descends (sign = +1) or ascends (sign = -1) along grads for every tensor
  // whose name starts with one of `prefixes`.
  void step(Networks<T>& params, Networks<T>& grads, const std::vector<std::string>& prefixes, double lr,
            double sign) {
    auto p = params.named();
    auto g = grads.named();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string& name = p[i].first;
      bool selected = false;
      for (const auto& prefix : prefixes) selected = selected || name.rfind(prefix + ".", 0) == 0;
      if (!selected) continue;
      auto& slot = moments_[name];
      if (slot.second.size() != p[i].second->size()) {
        slot.first = 0;
        slot.second = Mat<T>::Zero(p[i].second->rows(), p[i].second->cols());
      }
      ++slot.first;
      const double correction = 1.0 - std::pow(beta2_, static_cast<double>(slot.first));
      Mat<T>& v = slot.second;
      const Mat<T>& grad = *g[i].second;
      Mat<T>& param = *p[i].second;
      for (Eigen::Index k = 0; k < param.size(); ++k) {
        const double gk = static_cast<double>(grad.data()[k]);
        const double vk = beta2_ * static_cast<double>(v.data()[k]) + (1.0 - beta2_) * gk * gk;
        v.data()[k] = static_cast<T>(vk);
        param.data()[k] -= static_cast<T>(sign * lr * gk / (std::sqrt(vk / correction) + epsilon_));
      }
    }
  }

 private:
  double beta2_;
  double epsilon_;
  std::map<std::string, std::pair<long, Mat<T>>> moments_;
};

// Creates the stage-m step discriminator from its predecessor (the image
// discriminator when m = 1). The first-layer kernels are replicated across the
// doubled input channels and halved, so a channel-duplicated input reproduces
// the predecessor's output exactly.
template <class T>
void init_step_discriminator(GenState<T>& state, int m) {
  if (m < 1 || state.stage != m - 1 || static_cast<int>(state.nets.step_discs.size()) != m - 1)
    throw Error(Errc::stage_order_error, "cannot initialize stage " + std::to_string(m) + " from stage " +
                                             std::to_string(state.stage));
  const Discriminator<T>& prev = m == 1 ? state.nets.image_disc : state.nets.step_discs[m - 2];
  Discriminator<T> next = prev;
  Conv2d<T>& first = next.trunk.front();
  const Conv2d<T>& old = prev.trunk.front();
  const int kk = old.window.kernel * old.window.kernel;
  const int in_old = old.in_channels;
  first.in_channels = 2 * in_old;
  first.weight.resize(old.out_channels, static_cast<Eigen::Index>(2) * in_old * kk);
  for (int c = 0; c < 2 * in_old; ++c)
    first.weight.middleCols(static_cast<Eigen::Index>(c) * kk, kk) =
        old.weight.middleCols(static_cast<Eigen::Index>(c % in_old) * kk, kk) * static_cast<T>(0.5);
  state.nets.step_discs.push_back(std::move(next));
  state.stage = m;
}

struct TrainEvent {
  int stage = 0;
  int iteration = 0;  // within the stage
  double discriminator_objective = 0.0;
  double generator_loss = 0.0;
};

using TrainObserver = std::function<void(const TrainEvent&)>;

namespace detail {

inline std::vector<const Clip*> sample_batch(const Dataset& data, int batch_size, Rng& rng) {
  const int n = static_cast<int>(data.clips.size());
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<const Clip*> out;
  for (int attempt = 0; attempt < 64; ++attempt) {
    out.clear();
    if (batch_size <= n) {
      for (int i = 0; i < batch_size; ++i) {
        std::swap(order[i], order[i + uniform_index(n - i, rng)]);
        out.push_back(&data.clips[order[i]]);
      }
    } else {
      for (int i = 0; i < batch_size; ++i) out.push_back(&data.clips[uniform_index(n, rng)]);
    }
    std::set<std::string> distinct;
    for (const Clip* c : out) distinct.insert(c->caption);
    if (distinct.size() >= 2) return out;
  }
  throw Error(Errc::insufficient_data, "could not draw a batch with two distinct captions");
}

inline std::vector<int> sample_picks(int items, int steps, Rng& rng) {
  std::vector<int> picks(items);
  for (auto& p : picks) p = uniform_index(steps, rng);
  return picks;
}

inline void check_dataset(const Dataset& data, int m) {
  if (data.distinct_captions() < 2) throw Error(Errc::insufficient_data, "dataset needs two distinct captions");
  for (const auto& clip : data.clips)
    if (static_cast<int>(clip.frames.size()) < (1 << m))
      throw Error(Errc::insufficient_data, "a clip is shorter than " + std::to_string(1 << m) + " frames");
}

inline void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw Error(Errc::divergence_error, std::string(what) + " became non-finite");
}

// One generator update followed by one discriminator update at stage m.
template <class T>
TrainEvent train_step(GenState<T>& state, const TrainConfig& config, const Dataset& data, int m,
                      AdaptiveOptimizer<T>& opt, Rng& rng) {
  const int K = 1 << m;
  TrainEvent event;
  event.stage = m;

  // G, R: non-saturating loss against the image-level and sequence-level
  // discriminators.
  {
    RolloutCache<T> cache;
    const auto clips = sample_batch(data, config.batch_size, rng);
    const PairBatch<T> batch = make_pairs<T>(clips, state, m, rng, nullptr, &cache);
    const auto picks = sample_picks(batch.items(), K, rng);
    Networks<T> grads = state.nets.zeros_like();
    const LossValue loss = objective_gradients<T>(state, batch, m, picks, Objective::generator, &cache, grads);
    check_finite(loss.total, "generator loss");
    opt.step(state.nets, grads, {"recurrent", "generator"}, config.lr_generator, +1.0);
    event.generator_loss = loss.total;
  }

  // D_I and D_S_m (and the text encoder): ascend the matching-aware objective
  // on freshly drawn pairs.
  {
    const auto clips = sample_batch(data, config.batch_size, rng);
    const PairBatch<T> batch = make_pairs<T>(clips, state, m, rng);
    const auto picks = sample_picks(batch.items(), K, rng);
    Networks<T> grads = state.nets.zeros_like();
    const LossValue loss = objective_gradients<T>(state, batch, m, picks, Objective::discriminator, nullptr, grads);
    check_finite(loss.total, "discriminator objective");
    std::vector<std::string> groups = {"encoder", "image_disc"};
    if (m >= 1) groups.push_back("step_disc" + std::to_string(m));
    opt.step(state.nets, grads, groups, config.lr_discriminator, -1.0);
    event.discriminator_objective = loss.total;
  }
  ++state.iteration;
  return event;
}

}  // namespace detail

template <class T>
GenState<T> initial_state(const TrainConfig& config, const Dataset& data) {
  config.validate();
  GenState<T> state = init_state<T>(config.arch, Vocabulary(data.caption_words()), config.seed);
  state.config_hash = config_hash(config);
  state.optimizer_rule = config.optimizer_rule();
  return state;
}

// Stage I: single frames from text, updating G, R and D_I.
template <class T>
GenState<T> train_text_to_image(const TrainConfig& config, const Dataset& data, Rng& rng,
                                const TrainObserver& observer = {}) {
  GenState<T> state = initial_state<T>(config, data);
  detail::check_dataset(data, 0);
  AdaptiveOptimizer<T> opt(config.beta2, config.adam_epsilon);
  for (int it = 0; it < config.stage1_iterations; ++it) {
    TrainEvent e = detail::train_step<T>(state, config, data, 0, opt, rng);
    e.iteration = it;
    if (observer) observer(e);
  }
  return state;
}

// Evolutionary stages m = stage+1 .. n, each doubling the frame count and
// adding a step discriminator initialized from its predecessor.
template <class T>
GenState<T> train_evolutionary(GenState<T> state, const TrainConfig& config, const Dataset& data, int n, Rng& rng,
                               const TrainObserver& observer = {}) {
  config.validate();
  if (n < 0) throw Error(Errc::config_error, "stage count must be non-negative");
  if (n > 0) detail::check_dataset(data, n);
  AdaptiveOptimizer<T> opt(config.beta2, config.adam_epsilon);
  for (int m = state.stage + 1; m <= n; ++m) {
    init_step_discriminator(state, m);
    for (int it = 0; it < config.iterations_for_stage(m); ++it) {
      TrainEvent e = detail::train_step<T>(state, config, data, m, opt, rng);
      e.iteration = it;
      if (observer) observer(e);
    }
  }
  return state;
}

}  // namespace studio::tivgan
