#include <gtest/gtest.h>

#include <cmath>
#include <functional>
#include <random>

#include "media_fixture.hpp"
#include "studio/error.hpp"
#include "studio/hash.hpp"

using namespace studio;
using namespace studio::media;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = STUDIO_FIXTURES;

class MediaTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fs::temp_directory_path() / ("studio_media_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(root_);
    catalog_ = std::make_unique<catalog::Catalog>(root_ / "catalog");
  }
  void TearDown() override { fs::remove_all(root_); }

  std::string put(const std::string& term, int w, int h, std::uint8_t shade,
                  catalog::Origin origin = catalog::Origin::library) {
    return catalog_->put_image(term, encode_png(RgbImage(w, h, shade)), origin);
  }

  fs::path root_;
  std::unique_ptr<catalog::Catalog> catalog_;
};

kwx::TermList terms(std::initializer_list<const char*> names) {
  kwx::TermList list;
  for (const char* n : names) list.terms.push_back({n, 1.0, static_cast<int>(list.terms.size()) + 1});
  return list;
}

Errc code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no studio::Error thrown";
  return Errc::io_error;
}

int expected_frames(const MediaManifest& m) {
  int n = 0;
  for (const auto& s : m.segments) n += static_cast<int>(std::floor(s.duration * m.fps + 0.5));
  return n;
}

}  // namespace

TEST_F(MediaTest, AudioClipsDriveSegmentDurations) {
  const auto a = put("water", 4, 4, 10);
  const auto b = put("cycle", 4, 4, 20);
  catalog_->put_audio("water", read_file(kFixtures / "clip_a.wav"));
  catalog_->put_audio("cycle", read_file(kFixtures / "clip_b.wav"));
  const auto m = build_manifest(terms({"water", "cycle"}), {{"water", {a}}, {"cycle", {b}}}, *catalog_);
  ASSERT_EQ(m.segments.size(), 2u);
  EXPECT_EQ(m.segments[0].term, "water");
  EXPECT_NEAR(m.segments[0].duration, 1.5, 1e-9);
  EXPECT_NEAR(m.segments[1].duration, 2.5, 1e-9);
  EXPECT_NEAR(m.total_duration(), 4.0, 1e-9);
  EXPECT_EQ(m.frame_count(), 32);
  EXPECT_EQ(m.segments[0].audio, catalog_->get_audio("water").asset_id);
}

TEST_F(MediaTest, TermWithoutAudioGetsDefaultDuration) {
  const auto a = put("sun", 4, 4, 10);
  const auto m = build_manifest(terms({"sun"}), {{"sun", {a}}}, *catalog_);
  EXPECT_DOUBLE_EQ(m.segments[0].duration, 2.0);
  EXPECT_FALSE(m.segments[0].audio.has_value());
}

TEST_F(MediaTest, SegmentOrderFollowsTermRankAndSkipsUnselected) {
  const auto a = put("a", 2, 2, 1), c = put("c", 2, 2, 3);
  const auto m = build_manifest(terms({"c", "b", "a"}), {{"a", {a}}, {"c", {c}}, {"b", {}}}, *catalog_);
  ASSERT_EQ(m.segments.size(), 2u);
  EXPECT_EQ(m.segments[0].term, "c");
  EXPECT_EQ(m.segments[1].term, "a");
}

TEST_F(MediaTest, BuildManifestErrors) {
  const auto a = put("sun", 2, 2, 1);
  EXPECT_EQ(code_of([&] { build_manifest(terms({"sun"}), {{"sun", {"feedface"}}}, *catalog_); }),
            Errc::unknown_asset);
  EXPECT_EQ(code_of([&] { build_manifest(terms({"sun"}), {{"sun", {}}}, *catalog_); }), Errc::empty_selection);
  EXPECT_EQ(code_of([&] { build_manifest(terms({"sun"}), {}, *catalog_); }), Errc::empty_selection);
  EXPECT_EQ(code_of([&] { build_manifest(terms({"sun"}), {{"moon", {a}}}, *catalog_); }), Errc::invalid_argument);
}

TEST(ImageFrameRange, EqualSplitCoversSegment) {
  for (int i = 0; i < 3; ++i) EXPECT_EQ(image_frame_range(i, 3, 24), std::make_pair(8 * i, 8 * i + 8));
  for (int k = 1; k <= 7; ++k)
    for (int n = 0; n <= 30; ++n) {
      int covered = 0, prev = 0;
      for (int i = 0; i < k; ++i) {
        const auto [first, last] = image_frame_range(i, k, n);
        EXPECT_EQ(first, prev);
        EXPECT_LE(last - first, n / k + 1);
        EXPECT_GE(last - first, n / k);
        covered += last - first;
        prev = last;
      }
      EXPECT_EQ(covered, n);
    }
}

TEST(Manifest, SerializeParseRoundTrip) {
  MediaManifest m;
  m.fps = 12;
  m.width = 64;
  m.height = 48;
  m.segments = {{"rain", {"x", "y"}, 1.25, std::string("aud")}, {"sun", {"z"}, 2.0, std::nullopt}};
  const auto text = m.serialize();
  EXPECT_EQ(MediaManifest::parse(text), m);
  EXPECT_EQ(MediaManifest::parse(text).serialize(), text);
  const auto j = nlohmann::json::parse(text);
  EXPECT_EQ(j.at("frame_count"), 15 + 24);
  EXPECT_EQ(code_of([] { MediaManifest::parse("[1,2"); }), Errc::decode_error);
}

TEST(Manifest, ValidateRejectsBadValues) {
  MediaManifest m;
  m.segments = {{"rain", {"x"}, 1.0, std::nullopt}};
  EXPECT_NO_THROW(m.validate());
  auto bad = m;
  bad.fps = 0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), Errc::invalid_argument);
  bad = m;
  bad.segments[0].duration = 0.0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), Errc::invalid_argument);
  bad = m;
  bad.segments.clear();
  EXPECT_EQ(code_of([&] { bad.validate(); }), Errc::empty_selection);
}

TEST_F(MediaTest, FrameCountLawOnRandomManifests) {
  std::mt19937_64 rng(101);
  const auto names = media_fixture::populate(*catalog_, 6, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = media_fixture::random_manifest(*catalog_, names, rng);
    const auto video = render_silent_video(m, *catalog_);
    EXPECT_EQ(video.frame_count, expected_frames(m)) << m.serialize();
    EXPECT_EQ(m.frame_count(), expected_frames(m));
    const auto avi = read_avi(video.container);
    EXPECT_EQ(static_cast<int>(avi.video_chunks.size()), video.frame_count);
    EXPECT_FALSE(avi.audio.has_value());
    EXPECT_EQ(avi.fps, m.fps);
    EXPECT_EQ(avi.width, 48);
  }
}

TEST_F(MediaTest, SingleImageIsHeldForTheWholeSegment) {
  const auto a = put("sun", 10, 7, 99);
  auto m = build_manifest(terms({"sun"}), {{"sun", {a}}}, *catalog_, {.default_duration = 1.0, .fps = 8});
  const auto video = render_silent_video(m, *catalog_);
  ASSERT_EQ(video.frame_count, 8);
  const auto avi = read_avi(video.container);
  for (const auto& chunk : avi.video_chunks) EXPECT_EQ(chunk, avi.video_chunks[0]);
  const auto first = decode_jpeg(avi.video_chunks[0]);
  EXPECT_EQ(first.width, 320);
  EXPECT_EQ(first.height, 240);
}

TEST_F(MediaTest, RenderIsDeterministic) {
  std::mt19937_64 rng(7);
  const auto names = media_fixture::populate(*catalog_, 3, rng);
  const auto m = media_fixture::random_manifest(*catalog_, names, rng);
  EXPECT_EQ(render_silent_video(m, *catalog_).container, render_silent_video(m, *catalog_).container);
}

TEST_F(MediaTest, LetterboxKeepsAspect) {
  RgbImage wide(40, 10, 255);
  const auto id = catalog_->put_image("bar", encode_png(wide), catalog::Origin::library);
  const auto m = build_manifest(terms({"bar"}), {{"bar", {id}}}, *catalog_,
                                {.default_duration = 0.5, .fps = 4, .width = 48, .height = 32});
  const auto still = render_silent_video(m, *catalog_).stills.at(0);
  // 40x10 scales to 48x12, centered in rows 10..21.
  EXPECT_EQ(still.at(24, 2)[0], 0);
  EXPECT_EQ(still.at(24, 29)[0], 0);
  EXPECT_EQ(still.at(24, 16)[0], 255);
  EXPECT_EQ(still.at(0, 16)[1], 255);
}

TEST_F(MediaTest, UnknownImageIdFails) {
  MediaManifest m;
  m.segments = {{"x", {"0000"}, 1.0, std::nullopt}};
  EXPECT_EQ(code_of([&] { render_silent_video(m, *catalog_); }), Errc::unknown_asset);
}

TEST_F(MediaTest, AudioConcatenationMatchesExternalReference) {
  const auto a = put("water", 4, 4, 10);
  const auto b = put("cycle", 4, 4, 20);
  catalog_->put_audio("water", read_file(kFixtures / "clip_a.wav"));
  catalog_->put_audio("cycle", read_file(kFixtures / "clip_b.wav"));
  const auto m = build_manifest(terms({"water", "cycle"}), {{"water", {a}}, {"cycle", {b}}}, *catalog_);
  const auto audio = assemble_audio(m, *catalog_);
  EXPECT_EQ(decode_wav(audio.bytes).samples.size(), 64000u);
  EXPECT_NEAR(audio.duration, 4.0, 1e-3);
  EXPECT_EQ(audio.bytes, read_file(kFixtures / "clip_ab_concat.wav"));
}

TEST_F(MediaTest, SilentSegmentsAreZeroFilled) {
  const auto a = put("sun", 4, 4, 10), b = put("moon", 4, 4, 20);
  const auto m = build_manifest(terms({"sun", "moon"}), {{"sun", {a}}, {"moon", {b}}}, *catalog_,
                                {.default_duration = 1.25});
  const auto pcm = decode_wav(assemble_audio(m, *catalog_).bytes);
  EXPECT_EQ(pcm.samples.size(), 40000u);
  for (auto s : pcm.samples) ASSERT_EQ(s, 0);
}

TEST_F(MediaTest, AudioLengthLawOnRandomManifests) {
  std::mt19937_64 rng(202);
  const auto names = media_fixture::populate(*catalog_, 6, rng);
  for (int trial = 0; trial < 20; ++trial) {
    const auto m = media_fixture::random_manifest(*catalog_, names, rng);
    const auto audio = assemble_audio(m, *catalog_);
    const double seconds = static_cast<double>(decode_wav(audio.bytes).samples.size()) / 16000.0;
    EXPECT_LE(std::abs(seconds - m.total_duration()), 1e-3);
    EXPECT_EQ(audio.asset_id, sha256_hex(audio.bytes));
  }
}

TEST_F(MediaTest, DanglingAudioIdIsNotFound) {
  MediaManifest m;
  m.segments = {{"x", {"a"}, 1.0, std::string("missing")}};
  EXPECT_EQ(code_of([&] { assemble_audio(m, *catalog_); }), Errc::not_found);
}

TEST(Avi, RoundTripAndHash) {
  AviContents c;
  c.width = 8;
  c.height = 6;
  c.fps = 5;
  c.video_chunks = {encode_jpeg(RgbImage(8, 6, 3), 80), encode_jpeg(RgbImage(8, 6, 200), 80), Bytes{1, 2, 3}};
  c.audio = tone(0.6, 440);
  const auto bytes = write_avi(c);
  const auto back = read_avi(bytes);
  EXPECT_EQ(back.width, 8);
  EXPECT_EQ(back.height, 6);
  EXPECT_EQ(back.fps, 5);
  EXPECT_EQ(back.video_chunks, c.video_chunks);
  ASSERT_TRUE(back.audio.has_value());
  EXPECT_EQ(*back.audio, *c.audio);
  Sha256 h;
  for (const auto& chunk : c.video_chunks) h.update(chunk);
  EXPECT_EQ(video_stream_hash(bytes), h.hex_digest());
  EXPECT_DOUBLE_EQ(back.video_duration(), 0.6);
}

TEST(Avi, RejectsGarbage) {
  EXPECT_EQ(code_of([] { read_avi(Bytes{'R', 'I', 'F', 'F'}); }), Errc::decode_error);
  EXPECT_EQ(code_of([] { read_avi(Bytes(64, 7)); }), Errc::decode_error);
}

TEST(Jpeg, DeterministicAndClose) {
  RgbImage img(16, 16);
  for (int y = 0; y < 16; ++y)
    for (int x = 0; x < 16; ++x) {
      img.at(x, y)[0] = static_cast<std::uint8_t>(x * 16);
      img.at(x, y)[1] = static_cast<std::uint8_t>(y * 16);
      img.at(x, y)[2] = 128;
    }
  const auto a = encode_jpeg(img, 95);
  EXPECT_EQ(a, encode_jpeg(img, 95));
  const auto back = decode_jpeg(a);
  ASSERT_EQ(back.width, 16);
  double err = 0;
  for (std::size_t i = 0; i < img.pixels.size(); ++i) err += std::abs(img.pixels[i] - back.pixels[i]);
  EXPECT_LT(err / static_cast<double>(img.pixels.size()), 6.0);
  EXPECT_EQ(code_of([] { decode_jpeg(Bytes{0xff, 0xd8, 0}); }), Errc::decode_error);
}

TEST_F(MediaTest, MuxCopiesVideoStream) {
  std::mt19937_64 rng(303);
  const auto names = media_fixture::populate(*catalog_, 4, rng);
  for (int trial = 0; trial < 3; ++trial) {
    const auto m = media_fixture::random_manifest(*catalog_, names, rng);
    const auto video = render_silent_video(m, *catalog_);
    const auto audio = decode_wav(assemble_audio(m, *catalog_).bytes);
    AviMuxer muxer;
    const auto final = mux(video, audio, muxer, root_ / ("job" + std::to_string(trial)));
    EXPECT_EQ(final.video_hash, video_stream_hash(video.container));
    EXPECT_LE(std::abs(final.duration - final.audio_duration), kMaxDurationDelta);

    const auto silent = media_fixture::probe_avi(root_ / ("job" + std::to_string(trial)) / "silent.avi");
    const auto muxed = media_fixture::probe_avi(final.path);
    ASSERT_TRUE(silent.ok && muxed.ok);
    EXPECT_EQ(silent.streams, std::vector<std::string>{"vids"});
    EXPECT_EQ(muxed.streams, (std::vector<std::string>{"vids", "auds"}));
    EXPECT_EQ(muxed.video_sha256, silent.video_sha256);
    EXPECT_EQ(muxed.video_sha256, final.video_hash);
    EXPECT_EQ(muxed.video_frames, video.frame_count);
    EXPECT_LE(std::abs(muxed.video_frames / muxed.fps - muxed.audio_samples / 16000.0), kMaxDurationDelta);
  }
}

TEST_F(MediaTest, FourSecondClipsMuxToFourSeconds) {
  const auto a = put("water", 4, 4, 10);
  const auto b = put("cycle", 4, 4, 20);
  catalog_->put_audio("water", read_file(kFixtures / "clip_a.wav"));
  catalog_->put_audio("cycle", read_file(kFixtures / "clip_b.wav"));
  const auto m = build_manifest(terms({"water", "cycle"}), {{"water", {a}}, {"cycle", {b}}}, *catalog_);
  AviMuxer muxer;
  const auto final = mux(render_silent_video(m, *catalog_), decode_wav(assemble_audio(m, *catalog_).bytes), muxer,
                         root_ / "job");
  EXPECT_NEAR(final.duration, 4.0, kMaxDurationDelta);
  EXPECT_NEAR(final.audio_duration, 4.0, kMaxDurationDelta);
}

TEST_F(MediaTest, MuxRejectsDurationMismatch) {
  const auto a = put("sun", 4, 4, 10);
  const auto m = build_manifest(terms({"sun"}), {{"sun", {a}}}, *catalog_);
  const auto video = render_silent_video(m, *catalog_);
  AviMuxer muxer;
  EXPECT_EQ(code_of([&] { mux(video, tone(1.9, 300), muxer, root_ / "job"); }), Errc::duration_mismatch);
  EXPECT_NO_THROW(mux(video, tone(1.96, 300), muxer, root_ / "job"));
}

TEST_F(MediaTest, MissingMuxerFallsBackToBundle) {
  std::mt19937_64 rng(404);
  const auto names = media_fixture::populate(*catalog_, 3, rng);
  const auto m = media_fixture::random_manifest(*catalog_, names, rng);
  const auto video = render_silent_video(m, *catalog_);
  const auto audio = decode_wav(assemble_audio(m, *catalog_).bytes);
  NullMuxer none;
  EXPECT_EQ(code_of([&] { mux(video, audio, none, root_ / "job"); }), Errc::muxer_unavailable);

  const auto bundle = write_bundle(video, audio, m, root_ / "bundle");
  EXPECT_EQ(bundle.frame_count, video.frame_count);
  EXPECT_TRUE(bundle_complete(root_ / "bundle"));
  EXPECT_EQ(std::distance(fs::directory_iterator(root_ / "bundle" / "frames"), fs::directory_iterator{}),
            video.frame_count);
  EXPECT_EQ(decode_png(read_file(root_ / "bundle" / "frames" / "00000.png")), video.stills[0]);
  EXPECT_EQ(MediaManifest::parse(read_text_file(root_ / "bundle" / "manifest.json")), m);
  EXPECT_EQ(decode_wav(read_file(root_ / "bundle" / "audio.wav")), audio);
  fs::remove(root_ / "bundle" / "frames" / "00000.png");
  EXPECT_FALSE(bundle_complete(root_ / "bundle"));
}

TEST(Muxers, Factory) {
  EXPECT_EQ(make_muxer("avi")->name(), "avi");
  EXPECT_FALSE(make_muxer("none")->available());
  EXPECT_FALSE(FfmpegMuxer("/nonexistent/ffmpeg").available());
  EXPECT_EQ(code_of([] { make_muxer("gif"); }), Errc::config_error);
  FfmpegMuxer missing("/nonexistent/ffmpeg");
  EXPECT_EQ(code_of([&] { missing.mux("a", "b", "c"); }), Errc::muxer_unavailable);
}
