#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "studio/image.hpp"
#include "studio/io.hpp"

namespace studio::catalog {

enum class Origin { library, generated };

std::string_view to_string(Origin origin);
Origin origin_from_string(std::string_view text);

struct ImageAsset {
  std::string asset_id;  // SHA-256 hex of bytes
  std::string term;
  Bytes bytes;
  Origin origin = Origin::library;
  int width = 0;
  int height = 0;
  std::int64_t sequence = 0;  // catalog-wide insertion counter
};

struct AudioAsset {
  std::string asset_id;
  std::string term;
  Bytes bytes;
  double duration = 0.0;
};

struct TermEntry {
  std::vector<std::string> images;
  std::optional<std::string> audio;
  bool operator==(const TermEntry&) const = default;
};

struct ImageMeta {
  std::string term;
  Origin origin = Origin::library;
  int width = 0;
  int height = 0;
  std::int64_t sequence = 0;
  bool operator==(const ImageMeta&) const = default;
};

struct CatalogIndex {
  std::map<std::string, TermEntry> terms;
  std::map<std::string, ImageMeta> image_meta;  // asset_id -> metadata
  std::int64_t next_sequence = 0;

  std::string serialize() const;
  static CatalogIndex parse(std::string_view json);

  // Same terms, same image id sets and same audio ids; ignores order and metadata.
  bool same_content(const CatalogIndex& other) const;
  bool operator==(const CatalogIndex&) const = default;
};

// Per-term image and audio store rooted at a directory:
//   index.json, images/<term>/<asset_id>.png, audio/<term>.wav
// Readers see immutable index snapshots; writers serialize on an in-process
// lock plus an advisory file lock on the root.
class Catalog {
 public:
  explicit Catalog(std::filesystem::path root);

  const std::filesystem::path& root() const { return root_; }

  std::string put_image(const std::string& term, std::span<const std::uint8_t> png, Origin origin);
  std::vector<ImageAsset> query_images(const std::string& term) const;
  std::optional<ImageAsset> find_image(const std::string& asset_id) const;
  void remove_image(const std::string& asset_id);

  std::string put_audio(const std::string& term, std::span<const std::uint8_t> wav);
  AudioAsset get_audio(const std::string& term) const;  // throws NotFound
  AudioAsset audio_by_id(const std::string& asset_id) const;

  std::shared_ptr<const CatalogIndex> snapshot() const;
  // Rebuilds an index from the files under root alone.
  static CatalogIndex rescan(const std::filesystem::path& root);

 private:
  template <class Fn>
  void write(Fn&& mutate);
  ImageAsset load_image(const CatalogIndex& index, const std::string& asset_id) const;

  std::filesystem::path root_;
  mutable std::shared_mutex mutex_;
  std::shared_ptr<const CatalogIndex> index_;
};

// Image-text similarity seam.
class ImageTextScorer {
 public:
  virtual ~ImageTextScorer() = default;
  virtual double score(const std::string& term, const ImageAsset& asset) const = 0;
};

// 1 for a stored-term match plus sequence / (sequence + 1) for recency.
class StubScorer final : public ImageTextScorer {
 public:
  double score(const std::string& term, const ImageAsset& asset) const override;
};

// Descending score, ties by asset_id.
std::vector<ImageAsset> rank_candidates(const std::string& term, std::vector<ImageAsset> assets,
                                        const ImageTextScorer& scorer);

// Applied to generated frames before they are stored.
class ImageEnhancer {
 public:
  virtual ~ImageEnhancer() = default;
  virtual RgbImage enhance(const RgbImage& image) const = 0;
};

class IdentityEnhancer final : public ImageEnhancer {
 public:
  RgbImage enhance(const RgbImage& image) const override { return image; }
};

std::string put_generated(Catalog& catalog, const std::string& term, const RgbImage& frame,
                          const ImageEnhancer& enhancer);

}  // namespace studio::catalog
