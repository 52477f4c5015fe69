#include <CLI11.hpp>
#include <cstdlib>
#include <csignal>
#include <iostream>
#include <nlohmann/json.hpp>

#include "studio/error.hpp"
#include "studio/fid/fid.hpp"
#include "studio/hash.hpp"
#include "studio/service/fixtures.hpp"
#include "studio/service/studio.hpp"
#include "studio/tivgan/checkpoint.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace studio;

namespace {

struct Common {
  std::string config;
  std::string catalog;
  std::string data_root;
  std::uint64_t seed = 3;
  bool seed_set = false;
};

json load_json(const std::string& path) {
  if (path.empty()) return json::object();
  try {
    return json::parse(read_text_file(path));
  } catch (const json::exception& e) {
    throw Error(Errc::config_error, path + ": " + e.what());
  }
}

service::StudioConfig studio_config(const Common& c) {
  service::StudioConfig cfg = service::StudioConfig::from_json(load_json(c.config));
  if (const char* env = std::getenv("STUDIO_DATA_ROOT"); env != nullptr && *env != '\0') cfg.data_root = env;
  if (!c.data_root.empty()) cfg.data_root = c.data_root;
  if (!c.catalog.empty()) cfg.catalog_root = c.catalog;
  return cfg;
}

tivgan::Dataset dataset_for(const std::string& path, const tivgan::TrainConfig& cfg) {
  const std::string p = path.empty() ? cfg.dataset_path : path;
  if (p.empty()) {
    tivgan::ShapesOptions o;
    o.size = cfg.arch.image_size;
    return tivgan::make_shapes_corpus(o);
  }
  return tivgan::load_dataset(p, cfg.arch.channels);
}

service::HttpServer* g_server = nullptr;

void on_signal(int) {
  if (g_server != nullptr) g_server->stop();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sentence-to-video studio: GAN training, FID evaluation, composition pipeline and HTTP service"};
  app.require_subcommand(1);
  Common common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "JSON configuration file");
    sub->add_option("--catalog", common.catalog, "Catalog directory");
    sub->add_option("--data-root", common.data_root, "Data root (overrides STUDIO_DATA_ROOT)");
    sub->add_option("--seed", common.seed, "Random seed")->each([&](const std::string&) { common.seed_set = true; });
  };

  // make-shapes
  auto* shapes = app.add_subcommand("make-shapes", "Write the synthetic shapes corpus");
  std::string shapes_out;
  tivgan::ShapesOptions shapes_opts;
  shapes->add_option("--out", shapes_out, "Output directory")->required();
  shapes->add_option("--clips", shapes_opts.clips);
  shapes->add_option("--frames", shapes_opts.frames);
  shapes->add_option("--size", shapes_opts.size);
  shapes->add_option("--seed", shapes_opts.seed);

  // train
  auto* train = app.add_subcommand("train", "Train the text-to-video GAN (text-to-image stage, then evolution)");
  add_common(train);
  std::string train_dataset, train_out;
  int log_every = 250;
  train->add_option("--dataset", train_dataset, "Dataset directory (default: generated shapes corpus)");
  train->add_option("--out", train_out, "Checkpoint directory")->required();
  train->add_option("--log-every", log_every);

  // eval-fid
  auto* eval = app.add_subcommand("eval-fid", "FID of a checkpoint against real frames");
  add_common(eval);
  std::string eval_ckpt, eval_dataset, eval_csv;
  int eval_frames = 6, eval_dim = 32;
  eval->add_option("--checkpoint", eval_ckpt)->required();
  eval->add_option("--dataset", eval_dataset);
  eval->add_option("--frames", eval_frames, "Frames per method");
  eval->add_option("--dim", eval_dim, "Feature dimension of the projection extractor");
  eval->add_option("--csv", eval_csv, "Also write the report as CSV");

  // seed-catalog
  auto* seed = app.add_subcommand("seed-catalog", "Fill a catalog with the demo terms");
  add_common(seed);
  std::string seed_ckpt;
  std::vector<std::string> seed_terms;
  int seed_count = 2;
  seed->add_option("--checkpoint", seed_ckpt, "Also add generated candidates from this checkpoint");
  seed->add_option("--generated-terms", seed_terms, "Terms to generate for")->delimiter(',');
  seed->add_option("--generated-count", seed_count);

  // pipeline
  auto* pipe = app.add_subcommand("pipeline", "Sentence to video using the top-ranked candidates");
  add_common(pipe);
  std::string sentence, pipe_muxer;
  int per_term = 1;
  pipe->add_option("sentence", sentence)->required();
  pipe->add_option("--images-per-term", per_term);
  pipe->add_option("--muxer", pipe_muxer, "avi | ffmpeg | none");

  // serve
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  add_common(serve);
  std::string host = "127.0.0.1", asr_map;
  int port = 8080;
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--asr-map", asr_map, "Mock speech recognizer lookup file");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*shapes) {
      tivgan::save_dataset(tivgan::make_shapes_corpus(shapes_opts), shapes_out);
      std::cout << "wrote " << shapes_opts.clips << " clips to " << shapes_out << "\n";
    } else if (*train) {
      tivgan::TrainConfig cfg = load_json(common.config).get<tivgan::TrainConfig>();
      if (common.seed_set) cfg.seed = common.seed;
      const tivgan::Dataset data = dataset_for(train_dataset, cfg);
      tivgan::Rng rng(cfg.seed);
      auto log = [&](const tivgan::TrainEvent& e) {
        if (log_every > 0 && e.iteration % log_every == 0)
          std::cout << "stage " << e.stage << " iter " << e.iteration << " D " << e.discriminator_objective << " G "
                    << e.generator_loss << std::endl;
      };
      auto state = tivgan::train_text_to_image<float>(cfg, data, rng, log);
      state = tivgan::train_evolutionary<float>(std::move(state), cfg, data, cfg.stages, rng, log);
      tivgan::save_checkpoint(state, train_out);
      std::cout << "checkpoint " << train_out << " stage " << state.stage << " digest " << tivgan::state_digest(state)
                << "\n";
    } else if (*eval) {
      const auto state = tivgan::load_checkpoint<float>(eval_ckpt);
      tivgan::TrainConfig cfg;
      cfg.arch = state.arch;
      const tivgan::Dataset data = dataset_for(eval_dataset, cfg);
      const fid::RandomProjectionExtractor extractor(eval_dim);
      auto conditions = fid::text_conditions();
      conditions.push_back(service::spoken_condition(data));
      const auto report = fid::evaluate(state, data, eval_frames, extractor, conditions, common.seed);
      std::cout << report.to_table();
      if (!eval_csv.empty()) write_file_atomic(eval_csv, report.to_csv());
    } else if (*seed) {
      const auto cfg = studio_config(common);
      catalog::Catalog cat(cfg.catalog_dir());
      service::seed_catalog(cat, common.seed);
      if (!seed_ckpt.empty()) {
        const auto state = tivgan::load_checkpoint<float>(seed_ckpt);
        for (const auto& t : seed_terms) service::add_generated_candidates(cat, state, t, seed_count, common.seed);
      }
      std::cout << "catalog " << cfg.catalog_dir().string() << " has " << cat.snapshot()->terms.size() << " terms\n";
    } else if (*pipe) {
      auto cfg = studio_config(common);
      if (!pipe_muxer.empty()) cfg.muxer = pipe_muxer;
      {
        catalog::Catalog cat(cfg.catalog_dir());
        if (cat.snapshot()->terms.empty()) service::seed_catalog(cat, common.seed);
      }
      service::Studio st(cfg);
      const auto r = service::run_pipeline(st, sentence, per_term);
      json out = {{"session_id", r.session.session_id},
                  {"job_id", r.job.job_id},
                  {"terms", json::array()},
                  {"silent", r.session.outputs.silent.value_or("")},
                  {"final", r.session.outputs.final.value_or("")},
                  {"bundle", r.session.outputs.bundle.value_or("")},
                  {"frame_count", r.manifest.frame_count()},
                  {"duration", r.manifest.total_duration()},
                  {"silent_sha256", r.silent_hash},
                  {"final_sha256", r.final_hash},
                  {"video_stream_sha256", r.video_stream_hash}};
      for (const auto& t : r.session.terms.terms) out["terms"].push_back(t.term);
      std::cout << out.dump(2) << "\n";
    } else if (*serve) {
      auto cfg = studio_config(common);
      if (!asr_map.empty()) cfg.asr_map = asr_map;
      service::Studio st(cfg);
      service::HttpServer server(st);
      const int bound = server.bind(host, port);
      g_server = &server;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::cout << "listening on http://" << host << ":" << bound << std::endl;
      server.listen();
      g_server = nullptr;
    }
  } catch (const service::ApiError& e) {
    std::cerr << "error: " << e.code() << ": " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
