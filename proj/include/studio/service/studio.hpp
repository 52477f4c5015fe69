#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <nlohmann/json.hpp>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "studio/catalog/catalog.hpp"
#include "studio/error.hpp"
#include "studio/kwx/kwx.hpp"
#include "studio/media/media.hpp"

namespace studio::service {

// Failure with an HTTP status attached; the REST layer renders it as
// {"error": code, "message": text}.
class ApiError : public std::runtime_error {
 public:
  ApiError(int status, std::string code, const std::string& message)
      : std::runtime_error(message), status_(status), code_(std::move(code)) {}
  int status() const noexcept { return status_; }
  const std::string& code() const noexcept { return code_; }

 private:
  int status_;
  std::string code_;
};

// Library error -> HTTP status.
int http_status(Errc code);
ApiError to_api_error(const Error& e);

enum class JobState { queued, running, done, failed };
std::string_view to_string(JobState s);
JobState job_state_from_string(std::string_view s);

struct Job {
  std::string job_id;
  std::string session_id;
  JobState state = JobState::queued;
  double progress = 0.0;
  std::optional<std::string> error;

  bool active() const { return state == JobState::queued || state == JobState::running; }
  bool operator==(const Job&) const = default;
};

struct Outputs {
  std::optional<std::string> silent;  // paths
  std::optional<std::string> final;
  std::optional<std::string> bundle;
  bool operator==(const Outputs&) const = default;
};

struct Session {
  std::string session_id;
  kwx::NormalizedText input;
  kwx::TermList terms;
  bool terms_extracted = false;
  std::map<std::string, std::vector<std::string>> candidates;  // ranked ids per term
  std::map<std::string, std::vector<std::string>> selections;
  std::optional<std::string> active_job;
  std::optional<std::string> last_job;
  Outputs outputs;
  std::int64_t created_at = 0;  // unix seconds
  bool operator==(const Session&) const = default;
};

nlohmann::json to_json(const Session& s);
Session session_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Job& j);

// Sessions persisted in one SQLite file.
class SessionStore {
 public:
  explicit SessionStore(const std::filesystem::path& file);
  ~SessionStore();
  SessionStore(const SessionStore&) = delete;
  SessionStore& operator=(const SessionStore&) = delete;

  void put(const Session& s);
  std::optional<Session> get(const std::string& id) const;
  std::vector<std::string> ids() const;
  // Digest of every stored row, for before/after comparisons.
  std::string state_hash() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// FIFO job runner. Job records live in memory; every transition is appended
// to a JSON-lines log so crashed jobs stay visible.
class JobQueue {
 public:
  using Progress = std::function<void(double)>;
  using Task = std::function<void(const std::string& job_id, const Progress&)>;
  using Finished = std::function<void(const Job&)>;

  JobQueue(int workers, std::filesystem::path log_file);
  ~JobQueue();

  Job submit(const std::string& session_id, Task task, Finished on_finish);
  std::optional<Job> status(const std::string& job_id) const;
  void wait_idle();
  // Holds queued jobs until resume(); lets tests observe the queued state.
  void pause();
  void resume();

 private:
  void worker();
  void record(const Job& job);
  void update(const std::string& id, const std::function<void(Job&)>& fn);

  mutable std::mutex mutex_;
  std::condition_variable cv_;
  std::condition_variable idle_cv_;
  std::map<std::string, Job> jobs_;
  std::deque<std::tuple<std::string, Task, Finished>> pending_;
  std::vector<std::thread> workers_;
  std::filesystem::path log_file_;
  std::mutex log_mutex_;
  int running_ = 0;
  bool paused_ = false;
  bool stopping_ = false;
  std::uint64_t counter_ = 0;
};

struct StudioConfig {
  std::filesystem::path data_root = "studio-data";
  std::filesystem::path catalog_root;  // defaults to <data_root>/catalog
  std::string muxer = "avi";           // avi | ffmpeg | none
  int max_terms = 8;
  int workers = 1;
  media::ManifestOptions manifest;
  std::optional<std::filesystem::path> asr_map;  // mock recognizer lookup file

  static StudioConfig from_json(const nlohmann::json& j, StudioConfig base);
  static StudioConfig from_json(const nlohmann::json& j);
  std::filesystem::path catalog_dir() const { return catalog_root.empty() ? data_root / "catalog" : catalog_root; }
};

struct TermRow {
  std::string term;
  double score = 0.0;
  int rank = 0;
  std::optional<catalog::AudioAsset> audio;  // bytes left empty
  std::vector<catalog::ImageAsset> images;   // ranked, bytes left empty
};

nlohmann::json to_json(const std::vector<TermRow>& table);

struct Download {
  std::string content_type;
  Bytes bytes;
};

struct CreateRequest {
  std::optional<std::string> text;
  std::optional<Bytes> audio;  // WAV
};

class Studio {
 public:
  explicit Studio(StudioConfig config, std::shared_ptr<kwx::SpeechRecognizer> asr = nullptr,
                  std::shared_ptr<catalog::ImageTextScorer> scorer = nullptr,
                  std::shared_ptr<media::Muxer> muxer = nullptr);
  ~Studio();

  Session create_session(const CreateRequest& request);
  std::vector<TermRow> extract_terms(const std::string& session_id);
  Session select_images(const std::string& session_id, const std::string& term, const std::vector<std::string>& ids);
  std::string compose_video(const std::string& session_id);
  Job job_status(const std::string& job_id) const;
  Download download(const std::string& session_id, std::string_view kind) const;
  Session session(const std::string& session_id) const;

  std::string state_hash() const { return store_.state_hash(); }
  void wait_idle() { jobs_.wait_idle(); }
  JobQueue& jobs() { return jobs_; }
  catalog::Catalog& catalog() { return catalog_; }
  const StudioConfig& config() const { return config_; }

 private:
  std::shared_ptr<std::mutex> session_lock(const std::string& id);
  Session load(const std::string& id) const;

  StudioConfig config_;
  std::shared_ptr<kwx::SpeechRecognizer> asr_;
  std::shared_ptr<catalog::ImageTextScorer> scorer_;
  std::shared_ptr<media::Muxer> muxer_;
  catalog::Catalog catalog_;
  SessionStore store_;
  std::mutex locks_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  JobQueue jobs_;  // last: workers stop before the rest is destroyed
};

// One-shot sentence -> video, selecting the top-ranked candidates per term.
struct PipelineResult {
  Session session;
  Job job;
  media::MediaManifest manifest;
  std::string silent_hash;  // SHA-256 of the silent container
  std::string final_hash;   // SHA-256 of the final container, when muxed
  std::string video_stream_hash;
};

PipelineResult run_pipeline(Studio& studio, const std::string& sentence, int images_per_term = 1);

// Blocking HTTP front end over a Studio.
class HttpServer {
 public:
  explicit HttpServer(Studio& studio);
  ~HttpServer();
  // Binds to host:port (port 0 picks a free port) and returns the bound port.
  int bind(const std::string& host, int port);
  void listen();  // blocks until stop()
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

std::string base64_encode(std::span<const std::uint8_t> bytes);
Bytes base64_decode(std::string_view text);  // throws DecodeError

}  // namespace studio::service
