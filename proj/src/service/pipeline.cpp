#include "studio/error.hpp"
#include "studio/hash.hpp"
#include "studio/service/studio.hpp"

namespace studio::service {

namespace fs = std::filesystem;

PipelineResult run_pipeline(Studio& studio, const std::string& sentence, int images_per_term) {
  if (images_per_term < 1) throw Error(Errc::invalid_argument, "images_per_term must be at least 1");
  PipelineResult result;
  const Session created = studio.create_session(CreateRequest{sentence, std::nullopt});
  const auto table = studio.extract_terms(created.session_id);
  for (const auto& row : table) {
    std::vector<std::string> ids;
    for (const auto& img : row.images) {
      if (static_cast<int>(ids.size()) == images_per_term) break;
      ids.push_back(img.asset_id);
    }
    if (!ids.empty()) studio.select_images(created.session_id, row.term, ids);
  }
  const std::string job_id = studio.compose_video(created.session_id);
  studio.wait_idle();
  result.job = studio.job_status(job_id);
  result.session = studio.session(created.session_id);
  if (result.job.state != JobState::done)
    throw Error(Errc::io_error, "pipeline job failed: " + result.job.error.value_or("unknown error"));

  const fs::path dir = fs::path(*result.session.outputs.silent).parent_path();
  result.manifest = media::MediaManifest::parse(read_text_file(dir / "manifest.json"));
  const Bytes silent = read_file(*result.session.outputs.silent);
  result.silent_hash = sha256_hex(silent);
  result.video_stream_hash = media::video_stream_hash(silent);
  if (result.session.outputs.final) result.final_hash = sha256_hex(read_file(*result.session.outputs.final));
  return result;
}

}  // namespace studio::service
