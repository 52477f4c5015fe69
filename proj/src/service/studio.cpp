#include "studio/service/studio.hpp"

#include <ctime>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "studio/error.hpp"

namespace studio::service {

namespace fs = std::filesystem;
using nlohmann::json;

int http_status(Errc code) {
  switch (code) {
    case Errc::not_found: return 404;
    case Errc::adapter_unavailable:
    case Errc::muxer_unavailable: return 503;
    case Errc::adapter_error: return 502;
    case Errc::decode_error:
    case Errc::invalid_argument:
    case Errc::unknown_asset:
    case Errc::empty_selection:
    case Errc::shape_error:
    case Errc::insufficient_data:
    case Errc::insufficient_samples:
    case Errc::duration_mismatch:
    case Errc::config_error: return 422;
    default: return 500;
  }
}

ApiError to_api_error(const Error& e) { return ApiError(http_status(e.code()), std::string(errc_name(e.code())), e.what()); }

StudioConfig StudioConfig::from_json(const json& j, StudioConfig c) {
  if (j.contains("data_root")) c.data_root = j.at("data_root").get<std::string>();
  if (j.contains("catalog")) c.catalog_root = j.at("catalog").get<std::string>();
  c.muxer = j.value("muxer", c.muxer);
  c.max_terms = j.value("max_terms", c.max_terms);
  c.workers = j.value("workers", c.workers);
  c.manifest.fps = j.value("fps", c.manifest.fps);
  c.manifest.width = j.value("width", c.manifest.width);
  c.manifest.height = j.value("height", c.manifest.height);
  c.manifest.default_duration = j.value("default_duration", c.manifest.default_duration);
  if (j.contains("asr_map")) c.asr_map = fs::path(j.at("asr_map").get<std::string>());
  if (c.max_terms < 1) throw Error(Errc::config_error, "max_terms must be at least 1");
  return c;
}

StudioConfig StudioConfig::from_json(const json& j) { return from_json(j, StudioConfig{}); }

json to_json(const std::vector<TermRow>& table) {
  json rows = json::array();
  for (const auto& r : table) {
    json images = json::array();
    for (const auto& a : r.images)
      images.push_back({{"asset_id", a.asset_id},
                        {"term", a.term},
                        {"origin", catalog::to_string(a.origin)},
                        {"width", a.width},
                        {"height", a.height}});
    json audio = nullptr;
    if (r.audio) audio = {{"asset_id", r.audio->asset_id}, {"duration", r.audio->duration}};
    rows.push_back({{"term", r.term}, {"score", r.score}, {"rank", r.rank}, {"audio", audio}, {"images", images}});
  }
  return {{"terms", rows}};
}

namespace {

std::string random_id(const char* prefix) {
  static thread_local std::mt19937_64 rng(std::random_device{}());
  std::ostringstream os;
  os << prefix << std::hex << std::setfill('0') << std::setw(16) << rng() << std::setw(16) << rng();
  return os.str();
}

std::string content_type(const fs::path& p) {
  if (p.extension() == ".avi") return "video/x-msvideo";
  if (p.extension() == ".mp4") return "video/mp4";
  return "application/octet-stream";
}

}  // namespace

Studio::Studio(StudioConfig config, std::shared_ptr<kwx::SpeechRecognizer> asr,
               std::shared_ptr<catalog::ImageTextScorer> scorer, std::shared_ptr<media::Muxer> muxer)
    : config_(std::move(config)),
      asr_(std::move(asr)),
      scorer_(scorer ? std::move(scorer) : std::make_shared<catalog::StubScorer>()),
      muxer_(muxer ? std::move(muxer) : std::shared_ptr<media::Muxer>(media::make_muxer(config_.muxer))),
      catalog_(config_.catalog_dir()),
      store_(config_.data_root / "sessions.sqlite"),
      jobs_(config_.workers, config_.data_root / "jobs.log") {
  if (!asr_ && config_.asr_map) asr_ = kwx::MockRecognizer::from_json_file(*config_.asr_map);
}

Studio::~Studio() = default;

std::shared_ptr<std::mutex> Studio::session_lock(const std::string& id) {
  std::lock_guard lock(locks_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

Session Studio::load(const std::string& id) const {
  auto s = store_.get(id);
  if (!s) throw ApiError(404, "NotFound", "unknown session " + id);
  return *s;
}

Session Studio::session(const std::string& session_id) const { return load(session_id); }

Session Studio::create_session(const CreateRequest& request) {
  if (request.text.has_value() == request.audio.has_value())
    throw ApiError(422, "InvalidInput", "provide exactly one of text or audio");
  Session s;
  try {
    if (request.text) {
      s.input = kwx::normalize_text(*request.text);
    } else {
      s.input = kwx::transcribe(*request.audio, asr_.get());
    }
  } catch (const Error& e) {
    throw to_api_error(e);
  }
  if (s.input.tokens.empty()) throw ApiError(422, "EmptyInput", "input contains no words");
  s.session_id = random_id("s-");
  s.created_at = static_cast<std::int64_t>(std::time(nullptr));
  store_.put(s);
  return s;
}

std::vector<TermRow> Studio::extract_terms(const std::string& session_id) {
  auto lock_ptr = session_lock(session_id);
  std::lock_guard lock(*lock_ptr);
  Session s = load(session_id);
  std::vector<TermRow> table;
  try {
    s.terms = kwx::extract_terms(s.input, config_.max_terms);
    s.candidates.clear();
    for (const auto& t : s.terms.terms) {
      TermRow row{t.term, t.score, t.rank, std::nullopt, {}};
      try {
        row.audio = catalog_.get_audio(t.term);
        row.audio->bytes.clear();
      } catch (const Error& e) {
        if (e.code() != Errc::not_found) throw;
      }
      row.images = catalog::rank_candidates(t.term, catalog_.query_images(t.term), *scorer_);
      auto& ids = s.candidates[t.term];
      for (auto& img : row.images) {
        img.bytes.clear();
        ids.push_back(img.asset_id);
      }
      table.push_back(std::move(row));
    }
  } catch (const Error& e) {
    throw to_api_error(e);
  }
  for (auto it = s.selections.begin(); it != s.selections.end();)
    it = s.candidates.count(it->first) ? std::next(it) : s.selections.erase(it);
  s.terms_extracted = true;
  store_.put(s);
  return table;
}

Session Studio::select_images(const std::string& session_id, const std::string& term,
                              const std::vector<std::string>& ids) {
  auto lock_ptr = session_lock(session_id);
  std::lock_guard lock(*lock_ptr);
  Session s = load(session_id);
  auto cand = s.candidates.find(term);
  if (cand == s.candidates.end()) throw ApiError(404, "NotFound", "term '" + term + "' is not in this session");
  std::set<std::string> seen;
  for (const auto& id : ids) {
    if (std::find(cand->second.begin(), cand->second.end(), id) == cand->second.end())
      throw ApiError(422, "UnknownAsset", "asset " + id + " is not a candidate for '" + term + "'");
    if (!seen.insert(id).second) throw ApiError(422, "InvalidInput", "asset " + id + " selected twice");
  }
  if (ids.empty()) s.selections.erase(term);
  else s.selections[term] = ids;
  store_.put(s);
  return s;
}

std::string Studio::compose_video(const std::string& session_id) {
  auto lock_ptr = session_lock(session_id);
  std::lock_guard lock(*lock_ptr);
  Session s = load(session_id);
  if (s.active_job) {
    const auto job = jobs_.status(*s.active_job);
    if (job && job->active()) throw ApiError(409, "JobActive", "job " + job->job_id + " is still " + std::string(to_string(job->state)));
  }
  bool any = false;
  for (const auto& [term, ids] : s.selections) any = any || !ids.empty();
  if (!any) throw ApiError(422, "EmptySelection", "no term has a selected image");

  const kwx::TermList terms = s.terms;
  const auto selections = s.selections;
  auto outputs = std::make_shared<Outputs>();
  const Job job = jobs_.submit(
      session_id,
      [this, terms, selections, outputs, session_id](const std::string& job_id, const JobQueue::Progress& progress) {
        const fs::path dir = config_.data_root / "sessions" / session_id / job_id;
        fs::create_directories(dir);
        const auto manifest = media::build_manifest(terms, selections, catalog_, config_.manifest);
        write_file_atomic(dir / "manifest.json", manifest.serialize());
        progress(0.1);
        const auto video = media::render_silent_video(manifest, catalog_);
        write_file_atomic(dir / "silent.avi", video.container);
        outputs->silent = (dir / "silent.avi").string();
        progress(0.5);
        const auto audio = media::assemble_audio(manifest, catalog_);
        const PcmAudio pcm = decode_wav(audio.bytes);
        progress(0.7);
        try {
          const auto final = media::mux(video, pcm, *muxer_, dir / "mux");
          const fs::path out = dir / ("final" + muxer_->container_extension());
          fs::rename(final.path, out);
          outputs->final = out.string();
        } catch (const Error& e) {
          if (e.code() != Errc::muxer_unavailable) throw;
          media::write_bundle(video, pcm, manifest, dir / "bundle");
          outputs->bundle = (dir / "bundle").string();
        }
        progress(0.95);
      },
      [this, outputs, session_id](const Job& done) {
        auto lp = session_lock(session_id);
        std::lock_guard l(*lp);
        Session cur = load(session_id);
        if (done.state == JobState::done) cur.outputs = *outputs;
        cur.active_job.reset();
        cur.last_job = done.job_id;
        store_.put(cur);
      });
  s.active_job = job.job_id;
  store_.put(s);
  return job.job_id;
}

Job Studio::job_status(const std::string& job_id) const {
  const auto job = jobs_.status(job_id);
  if (!job) throw ApiError(404, "NotFound", "unknown job " + job_id);
  return *job;
}

Download Studio::download(const std::string& session_id, std::string_view kind) const {
  if (kind != "silent" && kind != "final") throw ApiError(422, "InvalidInput", "kind must be silent or final");
  const Session s = load(session_id);
  const auto& path = kind == "silent" ? s.outputs.silent : s.outputs.final;
  if (!path) throw ApiError(404, "NotFound", "no " + std::string(kind) + " video for this session yet");
  try {
    return Download{content_type(*path), read_file(*path)};
  } catch (const Error& e) {
    throw to_api_error(e);
  }
}

}  // namespace studio::service
