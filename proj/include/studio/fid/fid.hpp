#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <iomanip>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "studio/error.hpp"
#include "studio/kwx/kwx.hpp"
#include "studio/tivgan/state.hpp"

namespace studio::fid {

using tivgan::Frame;
using tivgan::FrameSequence;

struct FeatureMatrix {
  Eigen::MatrixXd rows;  // N x d
  std::string extractor_id;
};

struct FIDStats {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  long n = 0;
};

class FeatureExtractor {
 public:
  virtual ~FeatureExtractor() = default;
  virtual std::string id() const = 0;
  virtual int output_dim(int input_size) const = 0;
  virtual Eigen::VectorXd features(const Frame& frame) const = 0;
};

// Flattened HWC pixels.
class IdentityExtractor final : public FeatureExtractor {
 public:
  std::string id() const override { return "identity"; }
  int output_dim(int input_size) const override { return input_size; }
  Eigen::VectorXd features(const Frame& frame) const override {
    Eigen::VectorXd v(frame.values.size());
    for (std::size_t i = 0; i < frame.values.size(); ++i) v[static_cast<Eigen::Index>(i)] = frame.values[i];
    return v;
  }
};

// Fixed Gaussian projection of flattened pixels, scaled by 1/sqrt(input size).
// The matrix depends only on (seed, dim, input size).
class RandomProjectionExtractor final : public FeatureExtractor {
 public:
  explicit RandomProjectionExtractor(int dim = 32, std::uint64_t seed = 2024) : dim_(dim), seed_(seed) {
    if (dim < 1) throw Error(Errc::config_error, "projection dimension must be positive");
  }

  std::string id() const override { return "random-projection(d=" + std::to_string(dim_) + ",seed=" + std::to_string(seed_) + ")"; }
  int output_dim(int) const override { return dim_; }

  Eigen::VectorXd features(const Frame& frame) const override {
    const auto n = static_cast<Eigen::Index>(frame.values.size());
    if (projection_.cols() != n) {
      tivgan::Rng rng(seed_);
      std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(n)));
      projection_.resize(dim_, n);
      for (Eigen::Index i = 0; i < projection_.size(); ++i) projection_.data()[i] = normal(rng);
    }
    Eigen::VectorXd x(n);
    for (Eigen::Index i = 0; i < n; ++i) x[i] = frame.values[static_cast<std::size_t>(i)];
    return projection_ * x;
  }

 private:
  int dim_;
  std::uint64_t seed_;
  mutable Eigen::MatrixXd projection_;
};

inline FeatureMatrix extract_features(const std::vector<const Frame*>& frames, const FeatureExtractor& extractor) {
  if (frames.empty()) throw Error(Errc::shape_error, "no frames to extract features from");
  const Frame& first = *frames.front();
  FeatureMatrix out;
  out.extractor_id = extractor.id();
  out.rows.resize(static_cast<Eigen::Index>(frames.size()), extractor.output_dim(static_cast<int>(first.values.size())));
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const Frame& f = *frames[i];
    if (f.height != first.height || f.width != first.width || f.channels != first.channels)
      throw Error(Errc::shape_error, "inconsistent frame shapes");
    out.rows.row(static_cast<Eigen::Index>(i)) = extractor.features(f).transpose();
  }
  return out;
}

inline FeatureMatrix extract_features(const std::vector<FrameSequence>& sequences, const FeatureExtractor& extractor) {
  std::vector<const Frame*> frames;
  for (const auto& s : sequences)
    for (const auto& f : s.frames) frames.push_back(&f);
  return extract_features(frames, extractor);
}

// Column means and unbiased (N - 1) covariance, symmetrized.
inline FIDStats fit_gaussian(const FeatureMatrix& features) {
  const Eigen::MatrixXd& x = features.rows;
  if (x.rows() < 2) throw Error(Errc::insufficient_samples, "need at least 2 samples, got " + std::to_string(x.rows()));
  if (!x.allFinite()) throw Error(Errc::numerical_error, "non-finite features");
  FIDStats s;
  s.n = x.rows();
  s.mu = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered / static_cast<double>(x.rows() - 1);
  s.sigma = 0.5 * (s.sigma + s.sigma.transpose()).eval();
  return s;
}

inline constexpr double kEigenClamp = 1e-10;

struct FrechetDetail {
  double distance = 0.0;      // clamped at 0
  double raw = 0.0;           // before clamping
  int clamped_eigenvalues = 0;
};

// ||mu_r - mu_g||^2 + Tr(S_r + S_g - 2 (S_r S_g)^(1/2)). The trace of the
// square root is taken from the spectrum of S_r^(1/2) S_g S_r^(1/2), which
// shares its eigenvalues with S_r S_g but is symmetric.
inline FrechetDetail frechet_distance_detail(const FIDStats& r, const FIDStats& g) {
  const auto d = r.mu.size();
  if (g.mu.size() != d || r.sigma.rows() != d || r.sigma.cols() != d || g.sigma.rows() != d || g.sigma.cols() != d)
    throw Error(Errc::dimension_mismatch, "statistics dimensions differ");
  if (!r.mu.allFinite() || !g.mu.allFinite() || !r.sigma.allFinite() || !g.sigma.allFinite())
    throw Error(Errc::numerical_error, "non-finite statistics");

  FrechetDetail out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(0.5 * (r.sigma + r.sigma.transpose()));
  const Eigen::VectorXd root = er.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  const Eigen::MatrixXd sr = er.eigenvectors() * root.asDiagonal() * er.eigenvectors().transpose();
  Eigen::MatrixXd m = sr * g.sigma * sr;
  m = 0.5 * (m + m.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> em(m, Eigen::EigenvaluesOnly);
  double trace_sqrt = 0.0;
  for (Eigen::Index i = 0; i < em.eigenvalues().size(); ++i) {
    const double lambda = em.eigenvalues()[i];
    if (lambda < kEigenClamp) {
      ++out.clamped_eigenvalues;
      continue;
    }
    trace_sqrt += std::sqrt(lambda);
  }
  out.raw = (r.mu - g.mu).squaredNorm() + r.sigma.trace() + g.sigma.trace() - 2.0 * trace_sqrt;
  if (!std::isfinite(out.raw)) throw Error(Errc::numerical_error, "Frechet distance is not finite");
  out.distance = std::max(0.0, out.raw);
  return out;
}

inline double frechet_distance(const FIDStats& r, const FIDStats& g) { return frechet_distance_detail(r, g).distance; }

struct FIDRow {
  std::string label;
  double fid = 0.0;
  long real_samples = 0;
  long generated_samples = 0;
};

struct FIDReport {
  std::vector<FIDRow> rows;
  std::string extractor_id;
  std::string covariance = "unbiased (N-1)";

  std::string to_csv() const {
    std::ostringstream os;
    os << "condition,fid,n_real,n_generated,extractor,covariance\n";
    os << std::setprecision(10);
    for (const auto& r : rows)
      os << '"' << r.label << "\"," << r.fid << ',' << r.real_samples << ',' << r.generated_samples << ",\""
         << extractor_id << "\"," << covariance << '\n';
    return os.str();
  }

  // Conditions as columns, one FID row.
  std::string to_table() const {
    std::vector<std::string> values;
    std::size_t width = 8;
    for (const auto& r : rows) {
      std::ostringstream v;
      v << std::fixed << std::setprecision(2) << r.fid;
      values.push_back(v.str());
      width = std::max({width, r.label.size(), values.back().size()});
    }
    auto rule = [&] {
      std::string s = "+--------+";
      for (std::size_t i = 0; i < rows.size(); ++i) s += std::string(width + 2, '-') + "+";
      return s + "\n";
    };
    auto cell = [&](const std::string& text) { return " " + text + std::string(width - text.size(), ' ') + " |"; };
    std::string out = rule() + "| Metric |";
    for (const auto& r : rows) out += cell(r.label);
    out += "\n" + rule() + "| FID    |";
    for (const auto& v : values) out += cell(v);
    out += "\n" + rule();
    out += "n = " + (rows.empty() ? std::string("0") : std::to_string(rows.front().real_samples)) +
           " frames per method; extractor " + extractor_id + "; covariance " + covariance + "\n";
    return out;
  }
};

// Conditioning text for one sampled clip under an evaluation condition.
struct EvalCondition {
  std::string label;
  std::function<kwx::NormalizedText(const tivgan::Clip&)> text;
};

inline std::vector<EvalCondition> text_conditions() {
  return {
      {"Without Text or Sound", [](const tivgan::Clip&) { return kwx::normalize_text(""); }},
      {"with the text", [](const tivgan::Clip& c) { return kwx::normalize_text(c.caption); }},
  };
}

// Produces one frame for (clip, frame index, conditioning text).
using FrameSource = std::function<Frame(const tivgan::Clip&, int frame_index, const kwx::NormalizedText&, tivgan::Rng&)>;

// Frames from a trained state at its current stage; frame_index selects
// within the generated 2^stage sequence.
template <class T>
FrameSource generator_source(const tivgan::GenState<T>& state) {
  return [&state](const tivgan::Clip&, int frame_index, const kwx::NormalizedText& text, tivgan::Rng& rng) {
    const int m = state.stage;
    const auto phi = tivgan::encode_text(text, state);
    const auto z0 = tivgan::sample_noise<T>(state.arch, rng);
    std::vector<tivgan::NoiseSeed<T>> zs;
    for (int k = 0; k < (1 << m); ++k) zs.push_back(tivgan::sample_noise<T>(state.arch, rng));
    auto seq = tivgan::generate_frames(state, phi, z0, zs, m);
    return std::move(seq.frames[static_cast<std::size_t>(frame_index % (1 << m))]);
  };
}

// Samples frames_per_method real frames (uniform clip, uniform frame) and, for
// the same picks, one generated frame per condition; one report row per
// condition.
inline FIDReport evaluate(const FrameSource& source, const tivgan::Dataset& data, int frames_per_method,
                          const FeatureExtractor& extractor, const std::vector<EvalCondition>& conditions,
                          std::uint64_t seed = 99) {
  if (frames_per_method < 2)
    throw Error(Errc::insufficient_samples, "frames_per_method must be at least 2");
  if (data.clips.empty()) throw Error(Errc::insufficient_data, "empty dataset");
  tivgan::Rng pick_rng(seed);
  std::vector<std::pair<int, int>> picks;
  std::vector<const Frame*> real;
  for (int i = 0; i < frames_per_method; ++i) {
    const int c = std::uniform_int_distribution<int>(0, static_cast<int>(data.clips.size()) - 1)(pick_rng);
    const auto& frames = data.clips[static_cast<std::size_t>(c)].frames;
    if (frames.empty()) throw Error(Errc::insufficient_data, "clip without frames");
    const int f = std::uniform_int_distribution<int>(0, static_cast<int>(frames.size()) - 1)(pick_rng);
    picks.emplace_back(c, f);
    real.push_back(&frames[static_cast<std::size_t>(f)]);
  }
  const FIDStats real_stats = fit_gaussian(extract_features(real, extractor));

  FIDReport report;
  report.extractor_id = extractor.id();
  for (std::size_t ci = 0; ci < conditions.size(); ++ci) {
    tivgan::Rng gen_rng(seed + 1 + ci);
    std::vector<Frame> generated;
    generated.reserve(picks.size());
    for (const auto& [c, f] : picks) {
      const auto& clip = data.clips[static_cast<std::size_t>(c)];
      generated.push_back(source(clip, f, conditions[ci].text(clip), gen_rng));
    }
    std::vector<const Frame*> ptrs;
    for (const auto& g : generated) ptrs.push_back(&g);
    const FIDStats gen_stats = fit_gaussian(extract_features(ptrs, extractor));
    report.rows.push_back({conditions[ci].label, frechet_distance(real_stats, gen_stats), real_stats.n, gen_stats.n});
  }
  return report;
}

template <class T>
FIDReport evaluate(const tivgan::GenState<T>& state, const tivgan::Dataset& data, int frames_per_method,
                   const FeatureExtractor& extractor, const std::vector<EvalCondition>& conditions,
                   std::uint64_t seed = 99) {
  return evaluate(generator_source(state), data, frames_per_method, extractor, conditions, seed);
}

}  // namespace studio::fid
