#include "studio/catalog/catalog.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <algorithm>
#include <mutex>
#include <nlohmann/json.hpp>
#include <set>

#include "studio/error.hpp"
#include "studio/hash.hpp"
#include "studio/wav.hpp"

namespace studio::catalog {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(Origin origin) { return origin == Origin::generated ? "generated" : "library"; }

Origin origin_from_string(std::string_view text) {
  if (text == "library") return Origin::library;
  if (text == "generated") return Origin::generated;
  throw Error(Errc::invalid_argument, "unknown origin '" + std::string(text) + "'");
}

std::string CatalogIndex::serialize() const {
  json j;
  j["terms"] = json::object();
  for (const auto& [term, entry] : terms) {
    j["terms"][term] = {{"images", entry.images}, {"audio", entry.audio ? json(*entry.audio) : json(nullptr)}};
  }
  j["image_meta"] = json::object();
  for (const auto& [id, m] : image_meta) {
    j["image_meta"][id] = {{"term", m.term},
                           {"origin", to_string(m.origin)},
                           {"width", m.width},
                           {"height", m.height},
                           {"seq", m.sequence}};
  }
  j["next_sequence"] = next_sequence;
  return j.dump(2) + "\n";
}

CatalogIndex CatalogIndex::parse(std::string_view text) {
  CatalogIndex index;
  try {
    const json j = json::parse(text);
    for (const auto& [term, entry] : j.at("terms").items()) {
      TermEntry e;
      e.images = entry.at("images").get<std::vector<std::string>>();
      if (!entry.at("audio").is_null()) e.audio = entry.at("audio").get<std::string>();
      index.terms[term] = std::move(e);
    }
    if (j.contains("image_meta")) {
      for (const auto& [id, m] : j.at("image_meta").items()) {
        index.image_meta[id] = ImageMeta{m.at("term"), origin_from_string(m.at("origin").get<std::string>()),
                                         m.at("width"), m.at("height"), m.at("seq")};
      }
    }
    index.next_sequence = j.value("next_sequence", std::int64_t{0});
  } catch (const json::exception& e) {
    throw Error(Errc::decode_error, std::string("catalog index: ") + e.what());
  }
  return index;
}

bool CatalogIndex::same_content(const CatalogIndex& other) const {
  if (terms.size() != other.terms.size()) return false;
  for (const auto& [term, entry] : terms) {
    auto it = other.terms.find(term);
    if (it == other.terms.end() || entry.audio != it->second.audio) return false;
    const std::set<std::string> a(entry.images.begin(), entry.images.end());
    const std::set<std::string> b(it->second.images.begin(), it->second.images.end());
    if (a != b) return false;
  }
  return true;
}

namespace {

void check_term(const std::string& term) {
  if (term.empty() || term == "." || term == ".." || term.find_first_of("/\\", 0) != std::string::npos ||
      term.find('\0') != std::string::npos)
    throw Error(Errc::invalid_argument, "invalid term '" + term + "'");
}

fs::path image_path(const fs::path& root, const std::string& term, const std::string& id) {
  return root / "images" / term / (id + ".png");
}

fs::path audio_path(const fs::path& root, const std::string& term) { return root / "audio" / (term + ".wav"); }

CatalogIndex load_index(const fs::path& root) {
  const fs::path p = root / "index.json";
  if (!fs::exists(p)) return {};
  return CatalogIndex::parse(read_text_file(p));
}

// Advisory exclusive lock on <root>/.lock for the lifetime of the object.
class FileLock {
 public:
  explicit FileLock(const fs::path& path) {
    fd_ = ::open(path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error(Errc::io_error, "cannot open lock file " + path.string());
    while (::flock(fd_, LOCK_EX) != 0) {
      if (errno != EINTR) {
        ::close(fd_);
        throw Error(Errc::io_error, "cannot lock " + path.string());
      }
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

}  // namespace

Catalog::Catalog(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_);
  index_ = std::make_shared<const CatalogIndex>(load_index(root_));
}

std::shared_ptr<const CatalogIndex> Catalog::snapshot() const {
  std::shared_lock lock(mutex_);
  return index_;
}

template <class Fn>
void Catalog::write(Fn&& mutate) {
  std::unique_lock lock(mutex_);
  FileLock file_lock(root_ / ".lock");
  auto next = std::make_shared<CatalogIndex>(load_index(root_));
  mutate(*next);
  write_file_atomic(root_ / "index.json", next->serialize());
  index_ = std::move(next);
}

std::string Catalog::put_image(const std::string& term, std::span<const std::uint8_t> png, Origin origin) {
  check_term(term);
  const RgbImage image = decode_png(png);
  const std::string id = sha256_hex(png);
  write([&](CatalogIndex& index) {
    auto& entry = index.terms[term];
    if (std::find(entry.images.begin(), entry.images.end(), id) != entry.images.end()) return;
    const fs::path p = image_path(root_, term, id);
    if (!fs::exists(p)) write_file_atomic(p, png);
    entry.images.push_back(id);
    if (!index.image_meta.count(id))
      index.image_meta[id] = ImageMeta{term, origin, image.width, image.height, index.next_sequence++};
  });
  return id;
}

ImageAsset Catalog::load_image(const CatalogIndex& index, const std::string& asset_id) const {
  auto meta = index.image_meta.find(asset_id);
  if (meta == index.image_meta.end()) throw Error(Errc::unknown_asset, "unknown image " + asset_id);
  ImageAsset a;
  a.asset_id = asset_id;
  a.term = meta->second.term;
  a.origin = meta->second.origin;
  a.width = meta->second.width;
  a.height = meta->second.height;
  a.sequence = meta->second.sequence;
  fs::path p = image_path(root_, a.term, asset_id);
  if (!fs::exists(p)) {
    for (const auto& [term, entry] : index.terms)
      if (std::find(entry.images.begin(), entry.images.end(), asset_id) != entry.images.end())
        p = image_path(root_, term, asset_id);
  }
  a.bytes = read_file(p);
  return a;
}

std::vector<ImageAsset> Catalog::query_images(const std::string& term) const {
  const auto index = snapshot();
  std::vector<ImageAsset> out;
  auto it = index->terms.find(term);
  if (it == index->terms.end()) return out;
  for (const auto& id : it->second.images) out.push_back(load_image(*index, id));
  return out;
}

std::optional<ImageAsset> Catalog::find_image(const std::string& asset_id) const {
  const auto index = snapshot();
  if (!index->image_meta.count(asset_id)) return std::nullopt;
  try {
    return load_image(*index, asset_id);
  } catch (const Error& e) {
    if (e.code() == Errc::not_found) return std::nullopt;
    throw;
  }
}

void Catalog::remove_image(const std::string& asset_id) {
  write([&](CatalogIndex& index) {
    auto meta = index.image_meta.find(asset_id);
    if (meta == index.image_meta.end()) throw Error(Errc::unknown_asset, "unknown image " + asset_id);
    index.image_meta.erase(meta);
    for (auto& [term, entry] : index.terms) {
      auto& images = entry.images;
      if (std::find(images.begin(), images.end(), asset_id) == images.end()) continue;
      images.erase(std::remove(images.begin(), images.end(), asset_id), images.end());
      std::error_code ec;
      fs::remove(image_path(root_, term, asset_id), ec);
    }
  });
}

std::string Catalog::put_audio(const std::string& term, std::span<const std::uint8_t> wav) {
  check_term(term);
  (void)decode_wav(wav);
  const std::string id = sha256_hex(wav);
  write([&](CatalogIndex& index) {
    write_file_atomic(audio_path(root_, term), wav);
    index.terms[term].audio = id;
  });
  return id;
}

AudioAsset Catalog::get_audio(const std::string& term) const {
  const auto index = snapshot();
  auto it = index->terms.find(term);
  if (it == index->terms.end() || !it->second.audio) throw Error(Errc::not_found, "no audio for term '" + term + "'");
  AudioAsset a;
  a.asset_id = *it->second.audio;
  a.term = term;
  a.bytes = read_file(audio_path(root_, term));
  a.duration = decode_wav(a.bytes).duration();
  return a;
}

AudioAsset Catalog::audio_by_id(const std::string& asset_id) const {
  const auto index = snapshot();
  for (const auto& [term, entry] : index->terms)
    if (entry.audio == asset_id) return get_audio(term);
  throw Error(Errc::not_found, "unknown audio " + asset_id);
}

CatalogIndex Catalog::rescan(const fs::path& root) {
  CatalogIndex index;
  if (fs::is_directory(root / "images")) {
    std::vector<fs::path> dirs;
    for (const auto& d : fs::directory_iterator(root / "images"))
      if (d.is_directory()) dirs.push_back(d.path());
    std::sort(dirs.begin(), dirs.end());
    for (const auto& dir : dirs) {
      const std::string term = dir.filename().string();
      std::vector<std::string> ids;
      for (const auto& f : fs::directory_iterator(dir))
        if (f.path().extension() == ".png") ids.push_back(f.path().stem().string());
      std::sort(ids.begin(), ids.end());
      for (const auto& id : ids) {
        const Bytes bytes = read_file(image_path(root, term, id));
        const RgbImage image = decode_png(bytes);
        index.terms[term].images.push_back(id);
        index.image_meta[id] = ImageMeta{term, Origin::library, image.width, image.height, index.next_sequence++};
      }
    }
  }
  if (fs::is_directory(root / "audio")) {
    for (const auto& f : fs::directory_iterator(root / "audio")) {
      if (f.path().extension() != ".wav") continue;
      index.terms[f.path().stem().string()].audio = sha256_hex(read_file(f.path()));
    }
  }
  return index;
}

double StubScorer::score(const std::string& term, const ImageAsset& asset) const {
  const double recency = static_cast<double>(asset.sequence) / (static_cast<double>(asset.sequence) + 1.0);
  return (asset.term == term ? 1.0 : 0.0) + recency;
}

std::vector<ImageAsset> rank_candidates(const std::string& term, std::vector<ImageAsset> assets,
                                        const ImageTextScorer& scorer) {
  std::vector<std::pair<double, std::size_t>> keyed;
  keyed.reserve(assets.size());
  for (std::size_t i = 0; i < assets.size(); ++i) keyed.emplace_back(scorer.score(term, assets[i]), i);
  std::sort(keyed.begin(), keyed.end(), [&](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return assets[a.second].asset_id < assets[b.second].asset_id;
  });
  std::vector<ImageAsset> out;
  out.reserve(assets.size());
  for (const auto& [s, i] : keyed) out.push_back(std::move(assets[i]));
  return out;
}

std::string put_generated(Catalog& catalog, const std::string& term, const RgbImage& frame,
                          const ImageEnhancer& enhancer) {
  return catalog.put_image(term, encode_png(enhancer.enhance(frame)), Origin::generated);
}

}  // namespace studio::catalog
