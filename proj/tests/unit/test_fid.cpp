#include <gtest/gtest.h>

#include "fid_oracle.hpp"
#include "studio/fid/fid.hpp"

using namespace studio;
using namespace studio::fid;

namespace {

FIDStats stats(Eigen::VectorXd mu, Eigen::MatrixXd sigma) { return FIDStats{std::move(mu), std::move(sigma), 10}; }

FIDStats random_stats(int d, std::mt19937_64& rng) {
  return stats(fid_oracle::random_vector(d, rng), fid_oracle::random_spd(d, 0.05, 3.0, rng));
}

Frame frame_of(std::initializer_list<float> values, int h, int w, int c) {
  Frame f(h, w, c);
  f.values.assign(values);
  return f;
}

tivgan::Dataset noise_dataset(int clips, int frames, std::uint64_t seed) {
  tivgan::Dataset d;
  tivgan::Rng rng(seed);
  for (int i = 0; i < clips; ++i) {
    tivgan::Clip clip{"clip " + std::to_string(i % 3), {}};
    for (int f = 0; f < frames; ++f) {
      Frame fr(4, 4, 3);
      for (auto& v : fr.values) v = std::uniform_real_distribution<float>(-1, 1)(rng);
      clip.frames.push_back(fr);
    }
    d.clips.push_back(clip);
  }
  return d;
}

}  // namespace

TEST(ExtractFeatures, IdentityFlattensPixels) {
  const Frame f = frame_of({0.1f, -0.2f, 0.3f, 0.4f}, 2, 2, 1);
  const auto m = extract_features(std::vector<const Frame*>{&f}, IdentityExtractor{});
  ASSERT_EQ(m.rows.rows(), 1);
  ASSERT_EQ(m.rows.cols(), 4);
  for (int i = 0; i < 4; ++i) EXPECT_EQ(m.rows(0, i), static_cast<double>(f.values[i]));
  EXPECT_EQ(m.extractor_id, "identity");
}

TEST(ExtractFeatures, ProjectionIsDeterministicWithConfiguredDimension) {
  const auto data = noise_dataset(3, 4, 1);
  std::vector<FrameSequence> seqs;
  for (const auto& c : data.clips) seqs.push_back({c.frames, 8.0});
  const RandomProjectionExtractor a(12), b(12);
  const auto ma = extract_features(seqs, a);
  const auto mb = extract_features(seqs, b);
  EXPECT_EQ(ma.rows.rows(), 12);
  EXPECT_EQ(ma.rows.cols(), 12);
  EXPECT_TRUE(ma.rows == mb.rows);
  EXPECT_TRUE(ma.rows == extract_features(seqs, a).rows);
  EXPECT_NE(ma.rows, extract_features(seqs, RandomProjectionExtractor(12, 7)).rows);
}

TEST(ExtractFeatures, InconsistentShapesRejected) {
  const Frame a(2, 2, 1), b(2, 3, 1);
  try {
    extract_features(std::vector<const Frame*>{&a, &b}, IdentityExtractor{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::shape_error);
  }
}

TEST(FitGaussian, TwoPointFormula) {
  FeatureMatrix m;
  m.rows.resize(2, 2);
  m.rows << 0, 0, 2, 2;
  const auto s = fit_gaussian(m);
  EXPECT_EQ(s.mu, Eigen::Vector2d(1, 1));
  EXPECT_EQ(s.sigma, (Eigen::Matrix2d() << 2, 2, 2, 2).finished());
  EXPECT_EQ(s.n, 2);
}

TEST(FitGaussian, ConstantRowsHaveZeroCovariance) {
  FeatureMatrix m;
  m.rows = Eigen::MatrixXd::Constant(5, 3, 0.7);
  EXPECT_EQ(fit_gaussian(m).sigma, Eigen::MatrixXd::Zero(3, 3));
}

TEST(FitGaussian, MatchesDirectFormula) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  FeatureMatrix m;
  m.rows.resize(50, 6);
  for (Eigen::Index i = 0; i < m.rows.size(); ++i) m.rows.data()[i] = n(rng);
  const auto s = fit_gaussian(m);
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
  fid_oracle::mean_cov(m.rows, mu, sigma);
  EXPECT_LT((s.mu - mu).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.sigma - sigma).cwiseAbs().maxCoeff(), 1e-10);
  EXPECT_LT((s.sigma - s.sigma.transpose()).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index i = 0; i < 6; ++i) EXPECT_GE(s.sigma(i, i), 0.0);
}

TEST(FitGaussian, NeedsTwoSamples) {
  FeatureMatrix m;
  m.rows = Eigen::MatrixXd::Zero(1, 3);
  try {
    fit_gaussian(m);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_samples);
  }
}

TEST(FrechetDistance, IdenticalStatsAreZero) {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 20; ++i) {
    const auto s = random_stats(1 + i % 6, rng);
    EXPECT_NEAR(frechet_distance(s, s), 0.0, 1e-6);
  }
}

TEST(FrechetDistance, ScalarClosedForm) {
  const auto r = stats(Eigen::VectorXd::Constant(1, 0.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  const auto g = stats(Eigen::VectorXd::Constant(1, 2.0), Eigen::MatrixXd::Constant(1, 1, 1.0));
  EXPECT_NEAR(frechet_distance(r, g), 4.0, 1e-9);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.01, 4.0), m(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const double mr = m(rng), mg = m(rng), vr = u(rng), vg = u(rng);
    const double expected = (mr - mg) * (mr - mg) + std::pow(std::sqrt(vr) - std::sqrt(vg), 2);
    EXPECT_NEAR(frechet_distance(stats(Eigen::VectorXd::Constant(1, mr), Eigen::MatrixXd::Constant(1, 1, vr)),
                                 stats(Eigen::VectorXd::Constant(1, mg), Eigen::MatrixXd::Constant(1, 1, vg))),
                expected, 1e-9);
  }
}

TEST(FrechetDistance, SymmetricAndMatchesDirectOracle) {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 100; ++i) {
    const auto a = random_stats(4, rng);
    const auto b = random_stats(4, rng);
    const double ab = frechet_distance(a, b);
    EXPECT_NEAR(ab, frechet_distance(b, a), 1e-6);
    EXPECT_NEAR(ab, fid_oracle::frechet(a.mu, a.sigma, b.mu, b.sigma), 1e-6);
    EXPECT_GE(ab, 0.0);
  }
}

TEST(FrechetDistance, NoClampingWhenSpectraAreBoundedAway) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 200; ++i) {
    const int d = 2 + i % 7;
    const auto a = stats(fid_oracle::random_vector(d, rng), fid_oracle::random_spd(d, 1e-5, 2.0, rng));
    const auto b = stats(fid_oracle::random_vector(d, rng), fid_oracle::random_spd(d, 1e-5, 2.0, rng));
    EXPECT_EQ(frechet_distance_detail(a, b).clamped_eigenvalues, 0);
  }
}

TEST(FrechetDistance, RankDeficientCovarianceIsClampedNotNegative) {
  Eigen::MatrixXd sr = Eigen::MatrixXd::Zero(3, 3);
  sr(0, 0) = 1.0;
  const auto r = stats(Eigen::Vector3d::Zero(), sr);
  const auto g = stats(Eigen::Vector3d::Zero(), Eigen::MatrixXd::Identity(3, 3));
  const auto d = frechet_distance_detail(r, g);
  EXPECT_GE(d.clamped_eigenvalues, 2);
  EXPECT_NEAR(d.distance, 1.0 + 3.0 - 2.0, 1e-9);
}

TEST(FrechetDistance, Errors) {
  const auto a = stats(Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Identity(2, 2));
  const auto b = stats(Eigen::VectorXd::Zero(3), Eigen::MatrixXd::Identity(3, 3));
  try {
    frechet_distance(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::dimension_mismatch);
  }
  auto bad = a;
  bad.sigma(0, 0) = std::nan("");
  try {
    frechet_distance(a, bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::numerical_error);
  }
}

TEST(Evaluate, PassThroughGeneratorScoresZero) {
  const auto data = noise_dataset(6, 5, 2);
  FrameSource pass = [](const tivgan::Clip& clip, int f, const kwx::NormalizedText&, tivgan::Rng&) {
    return clip.frames[static_cast<std::size_t>(f)];
  };
  const auto report = evaluate(pass, data, 20, RandomProjectionExtractor(8), text_conditions());
  ASSERT_EQ(report.rows.size(), 2u);
  for (const auto& row : report.rows) {
    EXPECT_NEAR(row.fid, 0.0, 1e-6);
    EXPECT_EQ(row.real_samples, 20);
    EXPECT_EQ(row.generated_samples, 20);
  }
  EXPECT_EQ(report.rows[0].label, "Without Text or Sound");
  EXPECT_EQ(report.rows[1].label, "with the text");
}

TEST(Evaluate, GeneratedStateProducesOneRowPerCondition) {
  tivgan::Architecture arch;
  arch.image_size = 8;
  arch.noise_dim = 4;
  arch.text_dim = 4;
  arch.hidden_dim = 4;
  arch.embed_dim = 4;
  arch.gen_base = 2;
  arch.disc_base = 2;
  arch.cond_dim = 2;
  const auto data = tivgan::make_shapes_corpus({.clips = 4, .frames = 2, .size = 8, .seed = 1});
  const auto state = tivgan::init_state<float>(arch, tivgan::Vocabulary(data.caption_words()), 3);
  auto conds = text_conditions();
  conds.push_back({"custom", [](const tivgan::Clip&) { return kwx::normalize_text("red"); }});
  const auto a = evaluate(state, data, 6, RandomProjectionExtractor(4), conds);
  const auto b = evaluate(state, data, 6, RandomProjectionExtractor(4), conds);
  ASSERT_EQ(a.rows.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    EXPECT_GE(a.rows[i].fid, 0.0);
    EXPECT_EQ(a.rows[i].fid, b.rows[i].fid);
  }
}

TEST(Evaluate, FewerThanTwoFramesIsInsufficient) {
  const auto data = noise_dataset(2, 2, 3);
  FrameSource pass = [](const tivgan::Clip& clip, int f, const kwx::NormalizedText&, tivgan::Rng&) {
    return clip.frames[static_cast<std::size_t>(f)];
  };
  try {
    evaluate(pass, data, 1, IdentityExtractor{}, text_conditions());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), Errc::insufficient_samples);
  }
}

TEST(FIDReport, CsvAndTableRendering) {
  FIDReport r;
  r.extractor_id = "identity";
  r.rows = {{"Without Text or Sound", 12.5, 6, 6}, {"with the text", 9.1, 6, 6}, {"With text and sound", 3.25, 6, 6}};
  const auto csv = r.to_csv();
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "condition,fid,n_real,n_generated,extractor,covariance");
  EXPECT_NE(csv.find("\"With text and sound\",3.25,6,6,\"identity\",unbiased (N-1)"), std::string::npos);
  const auto table = r.to_table();
  EXPECT_NE(table.find("3.25"), std::string::npos);
  EXPECT_NE(table.find("with the text"), std::string::npos);
  EXPECT_EQ(table.find('%'), std::string::npos);
  EXPECT_EQ(csv.find('%'), std::string::npos);
}
