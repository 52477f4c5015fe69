#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <thread>

#include "media_fixture.hpp"
#include "studio/error.hpp"
#include "studio/hash.hpp"
#include "studio/service/fixtures.hpp"
#include "studio/service/studio.hpp"

// After Eigen: <resolv.h> defines a _res macro.
#include <httplib.h>

using namespace studio;
using namespace studio::service;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const fs::path kFixtures = STUDIO_FIXTURES;

fs::path fresh_dir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() /
                     ("studio_service_" + tag + "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
  fs::remove_all(p);
  return p;
}

// {status, code} of the ApiError thrown by f.
std::pair<int, std::string> api_error(const std::function<void()>& f) {
  try {
    f();
  } catch (const ApiError& e) {
    return {e.status(), e.code()};
  }
  ADD_FAILURE() << "no ApiError thrown";
  return {0, ""};
}

class StudioTest : public ::testing::Test {
 protected:
  void SetUp() override {
    root_ = fresh_dir("studio");
    config_.data_root = root_;
    config_.manifest.width = 64;
    config_.manifest.height = 48;
    config_.asr_map = kFixtures / "asr_map.json";
  }
  void TearDown() override {
    studio_.reset();
    fs::remove_all(root_);
  }

  Studio& studio() {
    if (!studio_) {
      studio_ = std::make_unique<Studio>(config_);
      if (studio_->catalog().snapshot()->terms.empty()) seed_catalog(studio_->catalog());
    }
    return *studio_;
  }

  // Session with terms extracted and the top candidate selected for each term.
  std::string ready_session() {
    const auto s = studio().create_session({fixture_sentence(), std::nullopt});
    for (const auto& row : studio().extract_terms(s.session_id))
      if (!row.images.empty()) studio().select_images(s.session_id, row.term, {row.images[0].asset_id});
    return s.session_id;
  }

  fs::path root_;
  StudioConfig config_;
  std::unique_ptr<Studio> studio_;
};

}  // namespace

TEST(HttpStatus, Mapping) {
  EXPECT_EQ(http_status(Errc::not_found), 404);
  EXPECT_EQ(http_status(Errc::unknown_asset), 422);
  EXPECT_EQ(http_status(Errc::empty_selection), 422);
  EXPECT_EQ(http_status(Errc::decode_error), 422);
  EXPECT_EQ(http_status(Errc::adapter_unavailable), 503);
  EXPECT_EQ(http_status(Errc::io_error), 500);
  const auto api = to_api_error(Error(Errc::empty_selection, "x"));
  EXPECT_EQ(api.status(), 422);
  EXPECT_EQ(api.code(), errc_name(Errc::empty_selection));
}

TEST(Base64, RoundTrip) {
  std::mt19937_64 rng(1);
  for (std::size_t n = 0; n < 40; ++n) {
    Bytes b(n);
    for (auto& x : b) x = static_cast<std::uint8_t>(rng());
    EXPECT_EQ(base64_decode(base64_encode(b)), b);
  }
  EXPECT_EQ(base64_encode(Bytes{'M', 'a', 'n'}), "TWFu");
  EXPECT_EQ(base64_encode(Bytes{'M', 'a'}), "TWE=");
  EXPECT_THROW(base64_decode("T$=="), Error);
}

TEST(Config, FromJsonOverridesOnlyGivenKeys) {
  StudioConfig base;
  base.max_terms = 5;
  const auto c = StudioConfig::from_json(json{{"data_root", "/x"}, {"fps", 12}, {"muxer", "none"}}, base);
  EXPECT_EQ(c.data_root, fs::path("/x"));
  EXPECT_EQ(c.catalog_dir(), fs::path("/x/catalog"));
  EXPECT_EQ(c.manifest.fps, 12);
  EXPECT_EQ(c.muxer, "none");
  EXPECT_EQ(c.max_terms, 5);
  EXPECT_EQ(StudioConfig::from_json(json::object()).manifest.default_duration, 2.0);
}

TEST(SessionJson, RoundTrip) {
  Session s;
  s.session_id = "s-1";
  s.input = kwx::normalize_text("Rain and sun");
  s.terms.terms = {{"rain", 1, 1}, {"sun", 1, 2}};
  s.terms_extracted = true;
  s.candidates = {{"rain", {"a", "b"}}, {"sun", {}}};
  s.selections = {{"rain", {"b"}}};
  s.last_job = "job-1";
  s.outputs.silent = "/tmp/x.avi";
  s.created_at = 1700000000;
  EXPECT_EQ(session_from_json(to_json(s)), s);
}

TEST(SessionStore, PersistsAcrossReopen) {
  const auto dir = fresh_dir("store");
  fs::create_directories(dir);
  Session s;
  s.session_id = "s-9";
  s.input = kwx::normalize_text("clouds");
  std::string hash;
  {
    SessionStore store(dir / "db.sqlite");
    const auto empty = store.state_hash();
    store.put(s);
    hash = store.state_hash();
    EXPECT_NE(hash, empty);
  }
  SessionStore again(dir / "db.sqlite");
  EXPECT_EQ(again.get("s-9"), s);
  EXPECT_FALSE(again.get("s-0").has_value());
  EXPECT_EQ(again.ids(), std::vector<std::string>{"s-9"});
  EXPECT_EQ(again.state_hash(), hash);
  fs::remove_all(dir);
}

TEST(JobQueue, RunsInOrderAndRecordsFailures) {
  const auto dir = fresh_dir("jobs");
  std::vector<int> order;
  std::vector<JobState> finished;
  {
    JobQueue q(1, dir / "jobs.log");
    q.pause();
    const auto a = q.submit("s", [&](const std::string&, const JobQueue::Progress& p) { p(0.5); order.push_back(1); },
                            [&](const Job& j) { finished.push_back(j.state); });
    const auto b = q.submit("s", [&](const std::string&, const JobQueue::Progress&) {
      order.push_back(2);
      throw Error(Errc::io_error, "disk gone");
    }, [&](const Job& j) { finished.push_back(j.state); });
    EXPECT_EQ(q.status(a.job_id)->state, JobState::queued);
    EXPECT_TRUE(q.status(a.job_id)->active());
    q.resume();
    q.wait_idle();
    EXPECT_EQ(q.status(a.job_id)->state, JobState::done);
    EXPECT_DOUBLE_EQ(q.status(a.job_id)->progress, 1.0);
    const auto failed = *q.status(b.job_id);
    EXPECT_EQ(failed.state, JobState::failed);
    ASSERT_TRUE(failed.error.has_value());
    EXPECT_NE(failed.error->find("disk gone"), std::string::npos);
    EXPECT_FALSE(q.status("job-x").has_value());
  }
  EXPECT_EQ(order, (std::vector<int>{1, 2}));
  EXPECT_EQ(finished, (std::vector<JobState>{JobState::done, JobState::failed}));
  std::ifstream log(dir / "jobs.log");
  std::string line, last_state;
  int lines = 0;
  while (std::getline(log, line)) {
    ++lines;
    EXPECT_NO_THROW(last_state = json::parse(line).at("state"));
  }
  EXPECT_GE(lines, 6);
  EXPECT_THROW(JobQueue(0, dir / "x.log"), Error);
  EXPECT_EQ(job_state_from_string("running"), JobState::running);
  fs::remove_all(dir);
}

TEST_F(StudioTest, TextSessionToFinalVideo) {
  const auto created = studio().create_session({fixture_sentence(), std::nullopt});
  EXPECT_EQ(created.input.source, kwx::TextSource::typed);
  const auto table = studio().extract_terms(created.session_id);
  ASSERT_FALSE(table.empty());
  EXPECT_EQ(table[0].term, "water");
  EXPECT_EQ(table[0].rank, 1);
  ASSERT_TRUE(table[0].audio.has_value());
  EXPECT_NEAR(table[0].audio->duration, 1.5, 1e-3);
  for (const auto& row : table)
    if (!row.images.empty()) studio().select_images(created.session_id, row.term, {row.images[0].asset_id});

  const auto job_id = studio().compose_video(created.session_id);
  studio().wait_idle();
  const auto job = studio().job_status(job_id);
  ASSERT_EQ(job.state, JobState::done) << job.error.value_or("");
  const auto s = studio().session(created.session_id);
  EXPECT_FALSE(s.active_job.has_value());
  EXPECT_EQ(s.last_job, job_id);
  ASSERT_TRUE(s.outputs.silent && s.outputs.final);

  const auto manifest = media::MediaManifest::parse(
      read_text_file(fs::path(*s.outputs.silent).parent_path() / "manifest.json"));
  const auto silent = studio().download(created.session_id, "silent");
  const auto final = studio().download(created.session_id, "final");
  EXPECT_EQ(final.content_type, "video/x-msvideo");
  const auto silent_avi = media::read_avi(silent.bytes);
  const auto final_avi = media::read_avi(final.bytes);
  EXPECT_EQ(static_cast<int>(silent_avi.video_chunks.size()), manifest.frame_count());
  EXPECT_EQ(media::video_stream_hash(final_avi), media::video_stream_hash(silent_avi));
  ASSERT_TRUE(final_avi.audio.has_value());
  EXPECT_LE(std::abs(final_avi.audio->duration() - final_avi.video_duration()), media::kMaxDurationDelta);
  const auto probe = media_fixture::probe_avi(*s.outputs.final);
  ASSERT_TRUE(probe.ok);
  EXPECT_EQ(probe.video_sha256, media::video_stream_hash(silent.bytes));
}

TEST_F(StudioTest, SpokenSessionUsesRecognizer) {
  const auto s = studio().create_session({std::nullopt, read_file(kFixtures / "fixture.wav")});
  EXPECT_EQ(s.input.tokens, (std::vector<std::string>{"water", "cycle"}));
  EXPECT_EQ(s.input.source, kwx::TextSource::transcribed);
  config_.asr_map.reset();
  studio_.reset();
  const auto err = api_error([&] { studio().create_session({std::nullopt, read_file(kFixtures / "fixture.wav")}); });
  EXPECT_EQ(err.first, 503);
}

TEST_F(StudioTest, InputValidation) {
  EXPECT_EQ(api_error([&] { studio().create_session({}); }), std::make_pair(422, std::string("InvalidInput")));
  EXPECT_EQ(api_error([&] { studio().create_session({"x", Bytes{1}}); }).second, "InvalidInput");
  EXPECT_EQ(api_error([&] { studio().create_session({"  ...  ", std::nullopt}); }),
            std::make_pair(422, std::string("EmptyInput")));
  EXPECT_EQ(api_error([&] { studio().create_session({std::nullopt, Bytes{1, 2, 3}}); }).first, 422);
}

TEST_F(StudioTest, SelectionErrors) {
  const auto s = studio().create_session({fixture_sentence(), std::nullopt});
  EXPECT_EQ(api_error([&] { studio().select_images(s.session_id, "water", {"a"}); }).first, 404);
  const auto table = studio().extract_terms(s.session_id);
  const std::string other = table[1].images.at(0).asset_id;
  EXPECT_EQ(api_error([&] { studio().select_images(s.session_id, "water", {other}); }),
            std::make_pair(422, std::string("UnknownAsset")));
  const std::string mine = table[0].images.at(0).asset_id;
  EXPECT_EQ(api_error([&] { studio().select_images(s.session_id, "water", {mine, mine}); }).second, "InvalidInput");
  EXPECT_EQ(api_error([&] { studio().select_images(s.session_id, "volcano", {mine}); }).first, 404);
  EXPECT_EQ(api_error([&] { studio().select_images("s-missing", "water", {mine}); }).first, 404);
  const auto after = studio().select_images(s.session_id, "water", {mine});
  EXPECT_EQ(after.selections.at("water"), std::vector<std::string>{mine});
  EXPECT_FALSE(studio().select_images(s.session_id, "water", {}).selections.count("water"));
}

TEST_F(StudioTest, EmptySelectionIs422) {
  const auto s = studio().create_session({fixture_sentence(), std::nullopt});
  studio().extract_terms(s.session_id);
  EXPECT_EQ(api_error([&] { studio().compose_video(s.session_id); }),
            std::make_pair(422, std::string("EmptySelection")));
}

TEST_F(StudioTest, SecondComposeWhileActiveIs409) {
  const auto id = ready_session();
  studio().jobs().pause();
  const auto job = studio().compose_video(id);
  EXPECT_EQ(studio().job_status(job).state, JobState::queued);
  EXPECT_EQ(api_error([&] { studio().compose_video(id); }), std::make_pair(409, std::string("JobActive")));
  studio().jobs().resume();
  studio().wait_idle();
  EXPECT_EQ(studio().job_status(job).state, JobState::done);
  const auto again = studio().compose_video(id);
  EXPECT_NE(again, job);
  studio().wait_idle();
}

TEST_F(StudioTest, GetsDoNotChangeState) {
  const auto id = ready_session();
  const auto job = studio().compose_video(id);
  studio().wait_idle();
  const auto before = studio().state_hash();
  const auto first = to_json(studio().session(id));
  for (int i = 0; i < 3; ++i) {
    EXPECT_EQ(to_json(studio().session(id)), first);
    EXPECT_EQ(studio().job_status(job), studio().job_status(job));
    EXPECT_EQ(studio().download(id, "silent").bytes, studio().download(id, "silent").bytes);
    studio().download(id, "final");
  }
  EXPECT_EQ(studio().state_hash(), before);
}

TEST_F(StudioTest, DownloadErrors) {
  const auto id = ready_session();
  EXPECT_EQ(api_error([&] { studio().download(id, "final"); }).first, 404);
  EXPECT_EQ(api_error([&] { studio().download(id, "gif"); }).first, 422);
  EXPECT_EQ(api_error([&] { studio().job_status("job-none"); }).first, 404);
}

TEST_F(StudioTest, MissingMuxerWritesBundle) {
  config_.muxer = "none";
  const auto id = ready_session();
  studio().compose_video(id);
  studio().wait_idle();
  const auto s = studio().session(id);
  ASSERT_TRUE(s.outputs.bundle.has_value());
  EXPECT_FALSE(s.outputs.final.has_value());
  EXPECT_TRUE(media::bundle_complete(*s.outputs.bundle));
  EXPECT_EQ(api_error([&] { studio().download(id, "final"); }).first, 404);
}

TEST_F(StudioTest, PipelineProducesLawfulVideo) {
  const auto r = run_pipeline(studio(), fixture_sentence());
  EXPECT_EQ(r.job.state, JobState::done);
  const auto silent = read_file(*r.session.outputs.silent);
  EXPECT_EQ(sha256_hex(silent), r.silent_hash);
  EXPECT_EQ(static_cast<int>(media::read_avi(silent).video_chunks.size()), r.manifest.frame_count());
  EXPECT_EQ(media::video_stream_hash(read_file(*r.session.outputs.final)), r.video_stream_hash);
  EXPECT_THROW(run_pipeline(studio(), fixture_sentence(), 0), Error);
}

TEST_F(StudioTest, HttpApi) {
  Studio& st = studio();
  HttpServer server(st);
  const int port = server.bind("127.0.0.1", 0);
  ASSERT_GT(port, 0);
  std::thread loop([&] { server.listen(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_read_timeout(30, 0);

  auto created = cli.Post("/api/sessions", json{{"text", fixture_sentence()}}.dump(), "application/json");
  ASSERT_TRUE(created);
  EXPECT_EQ(created->status, 201);
  const std::string id = json::parse(created->body).at("session_id");

  const std::string audio = base64_encode(read_file(kFixtures / "fixture.wav"));
  auto spoken = cli.Post("/api/sessions", json{{"audio_base64", audio}}.dump(), "application/json");
  EXPECT_EQ(spoken->status, 201);
  EXPECT_EQ(json::parse(spoken->body).at("source"), "transcribed");

  auto bad = cli.Post("/api/sessions", "{not json", "application/json");
  EXPECT_EQ(bad->status, 422);
  EXPECT_EQ(json::parse(bad->body).at("error"), "InvalidInput");
  EXPECT_EQ(cli.Post("/api/sessions", json{{"audio_base64", "@@"}}.dump(), "application/json")->status, 422);

  auto early = cli.Post("/api/sessions/" + id + "/video", "", "application/json");
  EXPECT_EQ(early->status, 422);
  EXPECT_EQ(json::parse(early->body).at("error"), "EmptySelection");

  auto terms = cli.Post("/api/sessions/" + id + "/terms", "", "application/json");
  ASSERT_EQ(terms->status, 200);
  const json table = json::parse(terms->body).at("terms");
  for (const auto& row : table) {
    if (row.at("images").empty()) continue;
    const std::string path = "/api/sessions/" + id + "/terms/" + row.at("term").get<std::string>() + "/selection";
    auto put = cli.Put(path, json{{"asset_ids", {row.at("images")[0].at("asset_id")}}}.dump(), "application/json");
    EXPECT_EQ(put->status, 200);
  }
  EXPECT_EQ(cli.Put("/api/sessions/" + id + "/terms/water/selection", "{}", "application/json")->status, 422);

  st.jobs().pause();
  auto composed = cli.Post("/api/sessions/" + id + "/video", "", "application/json");
  ASSERT_EQ(composed->status, 202);
  const std::string job = json::parse(composed->body).at("job_id");
  auto twice = cli.Post("/api/sessions/" + id + "/video", "", "application/json");
  EXPECT_EQ(twice->status, 409);
  EXPECT_EQ(json::parse(twice->body).at("error"), "JobActive");
  st.jobs().resume();
  st.wait_idle();

  const auto before = st.state_hash();
  auto status1 = cli.Get("/api/jobs/" + job);
  auto status2 = cli.Get("/api/jobs/" + job);
  EXPECT_EQ(status1->status, 200);
  EXPECT_EQ(status1->body, status2->body);
  EXPECT_EQ(json::parse(status1->body).at("state"), "done");
  auto video1 = cli.Get("/api/sessions/" + id + "/video");
  auto video2 = cli.Get("/api/sessions/" + id + "/video");
  EXPECT_EQ(video1->status, 200);
  EXPECT_EQ(video1->get_header_value("Content-Type"), "video/x-msvideo");
  EXPECT_EQ(video1->body, video2->body);
  auto silent = cli.Get("/api/sessions/" + id + "/video?kind=silent");
  EXPECT_EQ(media::video_stream_hash(Bytes(silent->body.begin(), silent->body.end())),
            media::video_stream_hash(Bytes(video1->body.begin(), video1->body.end())));
  EXPECT_EQ(st.state_hash(), before);

  EXPECT_EQ(cli.Get("/api/jobs/job-none")->status, 404);
  EXPECT_EQ(cli.Get("/api/sessions/s-none/video")->status, 404);
  auto unknown = cli.Get("/api/nothing");
  EXPECT_EQ(unknown->status, 404);
  EXPECT_EQ(json::parse(unknown->body).at("error"), "NotFound");

  server.stop();
  loop.join();
}
