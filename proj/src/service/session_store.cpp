#include <openssl/evp.h>
#include <sqlite3.h>

#include <mutex>

#include "studio/error.hpp"
#include "studio/hash.hpp"
#include "studio/service/studio.hpp"

namespace studio::service {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json text_json(const kwx::NormalizedText& t) {
  return {{"original", t.original}, {"tokens", t.tokens}, {"source", kwx::to_string(t.source)}};
}

json opt(const std::optional<std::string>& v) { return v ? json(*v) : json(nullptr); }

std::optional<std::string> opt_string(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<std::string>();
}

}  // namespace

json to_json(const Session& s) {
  json terms = json::array();
  for (const auto& t : s.terms.terms) terms.push_back({{"term", t.term}, {"score", t.score}, {"rank", t.rank}});
  return {{"session_id", s.session_id},
          {"input", text_json(s.input)},
          {"terms", terms},
          {"terms_extracted", s.terms_extracted},
          {"candidates", s.candidates},
          {"selections", s.selections},
          {"active_job", opt(s.active_job)},
          {"last_job", opt(s.last_job)},
          {"outputs", {{"silent", opt(s.outputs.silent)}, {"final", opt(s.outputs.final)}, {"bundle", opt(s.outputs.bundle)}}},
          {"created_at", s.created_at}};
}

Session session_from_json(const json& j) {
  Session s;
  s.session_id = j.at("session_id");
  const json& in = j.at("input");
  s.input.original = in.at("original");
  s.input.tokens = in.at("tokens").get<std::vector<std::string>>();
  s.input.source = in.at("source") == "transcribed" ? kwx::TextSource::transcribed : kwx::TextSource::typed;
  for (const auto& t : j.at("terms")) s.terms.terms.push_back({t.at("term"), t.at("score"), t.at("rank")});
  s.terms_extracted = j.at("terms_extracted");
  s.candidates = j.at("candidates").get<std::map<std::string, std::vector<std::string>>>();
  s.selections = j.at("selections").get<std::map<std::string, std::vector<std::string>>>();
  s.active_job = opt_string(j, "active_job");
  s.last_job = opt_string(j, "last_job");
  const json& out = j.at("outputs");
  s.outputs.silent = opt_string(out, "silent");
  s.outputs.final = opt_string(out, "final");
  s.outputs.bundle = opt_string(out, "bundle");
  s.created_at = j.at("created_at");
  return s;
}

struct SessionStore::Impl {
  sqlite3* db = nullptr;
  mutable std::mutex mutex;

  void exec(const char* sql) {
    char* err = nullptr;
    if (sqlite3_exec(db, sql, nullptr, nullptr, &err) != SQLITE_OK) {
      std::string msg = err != nullptr ? err : "unknown";
      sqlite3_free(err);
      throw Error(Errc::io_error, "sqlite: " + msg);
    }
  }
};

namespace {

class Statement {
 public:
  Statement(sqlite3* db, const char* sql) : db_(db) {
    if (sqlite3_prepare_v2(db, sql, -1, &stmt_, nullptr) != SQLITE_OK)
      throw Error(Errc::io_error, std::string("sqlite: ") + sqlite3_errmsg(db));
  }
  ~Statement() { sqlite3_finalize(stmt_); }
  Statement(const Statement&) = delete;
  Statement& operator=(const Statement&) = delete;

  void bind(int i, const std::string& v) { sqlite3_bind_text(stmt_, i, v.data(), static_cast<int>(v.size()), SQLITE_TRANSIENT); }
  void bind(int i, std::int64_t v) { sqlite3_bind_int64(stmt_, i, v); }
  bool step() {
    const int rc = sqlite3_step(stmt_);
    if (rc == SQLITE_ROW) return true;
    if (rc == SQLITE_DONE) return false;
    throw Error(Errc::io_error, std::string("sqlite: ") + sqlite3_errmsg(db_));
  }
  std::string text(int col) const {
    const auto* p = reinterpret_cast<const char*>(sqlite3_column_text(stmt_, col));
    return p != nullptr ? std::string(p, static_cast<std::size_t>(sqlite3_column_bytes(stmt_, col))) : std::string();
  }

 private:
  sqlite3* db_;
  sqlite3_stmt* stmt_ = nullptr;
};

}  // namespace

SessionStore::SessionStore(const fs::path& file) : impl_(std::make_unique<Impl>()) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  if (sqlite3_open_v2(file.c_str(), &impl_->db, SQLITE_OPEN_READWRITE | SQLITE_OPEN_CREATE | SQLITE_OPEN_FULLMUTEX,
                      nullptr) != SQLITE_OK) {
    std::string msg = impl_->db != nullptr ? sqlite3_errmsg(impl_->db) : "out of memory";
    sqlite3_close(impl_->db);
    throw Error(Errc::io_error, "cannot open session store " + file.string() + ": " + msg);
  }
  sqlite3_busy_timeout(impl_->db, 5000);
  impl_->exec("PRAGMA journal_mode=WAL");
  impl_->exec("CREATE TABLE IF NOT EXISTS sessions (id TEXT PRIMARY KEY, created_at INTEGER NOT NULL, body TEXT NOT NULL)");
}

SessionStore::~SessionStore() { sqlite3_close(impl_->db); }

void SessionStore::put(const Session& s) {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "INSERT OR REPLACE INTO sessions (id, created_at, body) VALUES (?1, ?2, ?3)");
  st.bind(1, s.session_id);
  st.bind(2, s.created_at);
  st.bind(3, to_json(s).dump());
  st.step();
}

std::optional<Session> SessionStore::get(const std::string& id) const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "SELECT body FROM sessions WHERE id = ?1");
  st.bind(1, id);
  if (!st.step()) return std::nullopt;
  return session_from_json(json::parse(st.text(0)));
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "SELECT id FROM sessions ORDER BY id");
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.text(0));
  return out;
}

std::string SessionStore::state_hash() const {
  std::lock_guard lock(impl_->mutex);
  Statement st(impl_->db, "SELECT id, body FROM sessions ORDER BY id");
  Sha256 h;
  while (st.step()) {
    h.update(st.text(0));
    h.update(std::string_view("\0", 1));
    h.update(st.text(1));
  }
  return h.hex_digest();
}

std::string base64_encode(std::span<const std::uint8_t> bytes) {
  std::string out(4 * ((bytes.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

Bytes base64_decode(std::string_view text) {
  std::string clean;
  for (char c : text)
    if (c != '\n' && c != '\r' && c != ' ') clean += c;
  if (clean.size() % 4 != 0) throw Error(Errc::decode_error, "base64 length is not a multiple of 4");
  Bytes out(clean.size() / 4 * 3);
  const int n = EVP_DecodeBlock(out.data(), reinterpret_cast<const unsigned char*>(clean.data()), static_cast<int>(clean.size()));
  if (n < 0) throw Error(Errc::decode_error, "invalid base64");
  std::size_t pad = 0;
  if (!clean.empty() && clean.back() == '=') ++pad;
  if (clean.size() > 1 && clean[clean.size() - 2] == '=') ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

}  // namespace studio::service
