#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "studio/tivgan/state.hpp"

namespace studio::tivgan {

// Discriminator outputs are clamped to [eps, 1 - eps] before the logarithm.
inline constexpr double kProbabilityEpsilon = 1e-7;

struct LossValue {
  double total = 0.0;
  double image_component = 0.0;
  double sequence_component = 0.0;
};

// Components are stored unchanged; total is their sum.
inline LossValue total_objective(double image_part, double sequence_part) {
  if (!std::isfinite(image_part) || !std::isfinite(sequence_part))
    throw Error(Errc::numerical_error, "non-finite loss component");
  return LossValue{image_part + sequence_part, image_part, sequence_part};
}

// Real, fake and wrong legs of a training batch. Frames are item-major with
// frames_per_item frames per item; the wrong leg reuses the real frames.
template <class T>
struct PairBatch {
  int frames_per_item = 1;
  FeatureMap<T> real;
  FeatureMap<T> fake;
  std::vector<Caption> captions;
  std::vector<Caption> wrong_captions;
  std::vector<std::string> caption_text;
  std::vector<std::string> wrong_text;

  int items() const { return static_cast<int>(captions.size()); }
};

enum class Objective {
  discriminator,  // sum of the five matching-aware log terms (maximized by D)
  generator,      // non-saturating: -[log D(I) + log D(I, phi)] (minimized by G, R)
};

template <class T>
struct MatchingResult {
  double value = 0.0;
  FeatureMap<T> dfake;  // gradient of value w.r.t. the fake leg input
  Mat<T> dphi;          // w.r.t. matched embeddings
  Mat<T> dphi_wrong;    // w.r.t. mismatched embeddings
};

namespace detail {

// Accumulates sum(log D) or sum(log(1 - D)) for logits and writes dvalue/dlogit.
template <class T>
double log_term(const Mat<T>& logits, bool complement, double weight, Mat<T>* dlogits) {
  double total = 0.0;
  if (dlogits != nullptr) dlogits->resize(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.size(); ++i) {
    const double a = static_cast<double>(logits.data()[i]);
    const double p = 1.0 / (1.0 + std::exp(-a));
    if (!std::isfinite(p)) throw Error(Errc::numerical_error, "discriminator output is not finite");
    const bool clamped = p < kProbabilityEpsilon || p > 1.0 - kProbabilityEpsilon;
    const double pc = std::clamp(p, kProbabilityEpsilon, 1.0 - kProbabilityEpsilon);
    total += weight * (complement ? std::log(1.0 - pc) : std::log(pc));
    if (dlogits != nullptr) {
      const double g = clamped ? 0.0 : (complement ? -p : 1.0 - p);
      dlogits->data()[i] = static_cast<T>(weight * g);
    }
  }
  return total;
}

}  // namespace detail

// The matching-aware objective of discriminator `d` over real/fake/wrong legs.
// When `grad` is non-null, parameter gradients of the value are accumulated into
// it and input gradients are returned.
template <class T>
MatchingResult<T> matching_loss(const Discriminator<T>& d, const FeatureMap<T>& real, const FeatureMap<T>& fake,
                                 const Mat<T>& phi, const Mat<T>& phi_wrong, Objective objective,
                                 Discriminator<T>* grad) {
  using D = Discriminator<T>;
  const bool want = grad != nullptr;
  MatchingResult<T> out;
  out.dphi = Mat<T>::Zero(phi.rows(), phi.cols());
  out.dphi_wrong = Mat<T>::Zero(phi_wrong.rows(), phi_wrong.cols());
  Mat<T> dl;

  // Fake leg: D(I) and D(I, phi).
  typename D::TrunkCache fake_trunk;
  typename D::PlainCache fake_plain;
  typename D::JointCache fake_joint;
  const FeatureMap<T> fake_features = d.trunk_forward(fake, want ? &fake_trunk : nullptr);
  const Mat<T> fake_plain_logits = d.plain_forward(fake_features, want ? &fake_plain : nullptr);
  const Mat<T> fake_joint_logits = d.joint_forward(fake_features, phi, want ? &fake_joint : nullptr);
  const bool gen = objective == Objective::generator;
  const double sign = gen ? -1.0 : 1.0;
  FeatureMap<T> dfeat(fake_features.channels, fake_features.batch, fake_features.height, fake_features.width);
  out.value += detail::log_term<T>(fake_plain_logits, !gen, sign, want ? &dl : nullptr);
  if (want) d.plain_backward(fake_plain, dl, *grad, dfeat);
  out.value += detail::log_term<T>(fake_joint_logits, !gen, sign, want ? &dl : nullptr);
  if (want) out.dphi += d.joint_backward(fake_joint, dl, *grad, dfeat);
  if (want) out.dfake = d.trunk_backward(fake_trunk, dfeat, *grad);

  if (gen) return out;

  // Real leg: D(X), D(X, phi) and the wrong pair D(X, phi_hat).
  typename D::TrunkCache real_trunk;
  typename D::PlainCache real_plain;
  typename D::JointCache real_joint, wrong_joint;
  const FeatureMap<T> real_features = d.trunk_forward(real, want ? &real_trunk : nullptr);
  const Mat<T> real_plain_logits = d.plain_forward(real_features, want ? &real_plain : nullptr);
  const Mat<T> real_joint_logits = d.joint_forward(real_features, phi, want ? &real_joint : nullptr);
  const Mat<T> wrong_joint_logits = d.joint_forward(real_features, phi_wrong, want ? &wrong_joint : nullptr);
  FeatureMap<T> dreal(real_features.channels, real_features.batch, real_features.height, real_features.width);
  out.value += detail::log_term<T>(real_plain_logits, false, 1.0, want ? &dl : nullptr);
  if (want) d.plain_backward(real_plain, dl, *grad, dreal);
  out.value += detail::log_term<T>(real_joint_logits, false, 1.0, want ? &dl : nullptr);
  if (want) out.dphi += d.joint_backward(real_joint, dl, *grad, dreal);
  out.value += detail::log_term<T>(wrong_joint_logits, true, 1.0, want ? &dl : nullptr);
  if (want) out.dphi_wrong += d.joint_backward(wrong_joint, dl, *grad, dreal);
  if (want) (void)d.trunk_backward(real_trunk, dreal, *grad);
  return out;
}

// Image-level loss: the matching-aware sum through the image discriminator.
template <class T>
double image_level_loss(const GenState<T>& state, const PairBatch<T>& batch) {
  if (batch.frames_per_item != 1) throw Error(Errc::shape_error, "image-level loss needs single-frame legs");
  const auto& enc = state.nets.encoder;
  const Mat<T> phi = enc.forward(batch.captions, nullptr);
  const Mat<T> phi_wrong = enc.forward(batch.wrong_captions, nullptr);
  return matching_loss<T>(state.nets.image_disc, batch.real, batch.fake, phi, phi_wrong, Objective::discriminator,
                          nullptr)
      .value;
}

template <class T>
const Discriminator<T>& step_discriminator(const GenState<T>& state, int m) {
  if (m < 1) throw Error(Errc::shape_error, "step discriminators start at stage 1");
  if (m > state.stage || m > static_cast<int>(state.nets.step_discs.size()))
    throw Error(Errc::stage_exceeded, "no step discriminator for stage " + std::to_string(m));
  return state.nets.step_discs[m - 1];
}

// Sequence-level loss: the same sum through the stage-m step discriminator,
// which consumes each 2^m-frame block stacked along channels.
template <class T>
double sequence_level_loss(const GenState<T>& state, const PairBatch<T>& batch, int m) {
  const Discriminator<T>& d = step_discriminator(state, m);
  if (batch.frames_per_item != (1 << m))
    throw Error(Errc::shape_error, "stage " + std::to_string(m) + " needs " + std::to_string(1 << m) +
                                       "-frame legs, got " + std::to_string(batch.frames_per_item));
  const auto& enc = state.nets.encoder;
  const Mat<T> phi = enc.forward(batch.captions, nullptr);
  const Mat<T> phi_wrong = enc.forward(batch.wrong_captions, nullptr);
  return matching_loss<T>(d, stack_steps(batch.real, batch.frames_per_item), stack_steps(batch.fake, batch.frames_per_item),
                          phi, phi_wrong, Objective::discriminator, nullptr)
      .value;
}

// Value and full gradient of the stage-m objective on `batch`. At m = 0 only the
// image-level term exists; for m >= 1 the image-level term sees frame picks[b]
// of each item and the sequence-level term sees whole blocks. When `rollout`
// is given, the fake leg gradient continues through G and R.
template <class T>
LossValue objective_gradients(const GenState<T>& state, const PairBatch<T>& batch, int m,
                              const std::vector<int>& picks, Objective objective, const RolloutCache<T>* rollout,
                              Networks<T>& grads) {
  const Networks<T>& nets = state.nets;
  typename TextEncoder<T>::Cache enc_cache, wrong_cache;
  const Mat<T> phi = nets.encoder.forward(batch.captions, &enc_cache);
  const Mat<T> phi_wrong = nets.encoder.forward(batch.wrong_captions, &wrong_cache);
  const int K = batch.frames_per_item;
  if (K != (1 << m)) throw Error(Errc::shape_error, "batch frame count does not match stage");

  FeatureMap<T> dfake(batch.fake.channels, batch.fake.batch, batch.fake.height, batch.fake.width);
  Mat<T> dphi = Mat<T>::Zero(phi.rows(), phi.cols());
  Mat<T> dphi_wrong = Mat<T>::Zero(phi.rows(), phi.cols());

  double image_part = 0.0, sequence_part = 0.0;
  if (m == 0) {
    auto r = matching_loss<T>(nets.image_disc, batch.real, batch.fake, phi, phi_wrong, objective, &grads.image_disc);
    image_part = r.value;
    dfake.data += r.dfake.data;
    dphi += r.dphi;
    dphi_wrong += r.dphi_wrong;
  } else {
    const auto real_pick = pick_steps(batch.real, K, picks);
    const auto fake_pick = pick_steps(batch.fake, K, picks);
    auto ri = matching_loss<T>(nets.image_disc, real_pick, fake_pick, phi, phi_wrong, objective, &grads.image_disc);
    image_part = ri.value;
    scatter_steps_add(ri.dfake, K, picks, dfake);
    dphi += ri.dphi;
    dphi_wrong += ri.dphi_wrong;

    const Discriminator<T>& ds = step_discriminator(state, m);
    auto rs = matching_loss<T>(ds, stack_steps(batch.real, K), stack_steps(batch.fake, K), phi, phi_wrong, objective,
                               &grads.step_discs[m - 1]);
    sequence_part = rs.value;
    dfake.data += unstack_steps(rs.dfake, K).data;
    dphi += rs.dphi;
    dphi_wrong += rs.dphi_wrong;
  }
  if (rollout != nullptr) dphi += rollout_backward<T>(nets, *rollout, dfake, grads);
  nets.encoder.backward(enc_cache, dphi, grads.encoder);
  nets.encoder.backward(wrong_cache, dphi_wrong, grads.encoder);
  return total_objective(image_part, sequence_part);
}

}  // namespace studio::tivgan
