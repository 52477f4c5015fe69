#pragma once

#include <cstring>
#include <filesystem>
#include <nlohmann/json.hpp>
#include <string>

#include "studio/hash.hpp"
#include "studio/io.hpp"
#include "studio/tivgan/train.hpp"

namespace studio::tivgan {

// Checkpoint layout:
//   <dir>/meta.json            architecture, vocabulary, stage, iteration, seed, hashes
//   <dir>/tensors/<name>.bin   "STEN" | u32 dtype bytes | u32 rows | u32 cols | raw row-major values
namespace detail {

inline void put_u32(Bytes& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const Bytes& in, std::size_t at) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
  return v;
}

template <class T>
Bytes encode_tensor(const Mat<T>& m) {
  Bytes out = {'S', 'T', 'E', 'N'};
  put_u32(out, sizeof(T));
  put_u32(out, static_cast<std::uint32_t>(m.rows()));
  put_u32(out, static_cast<std::uint32_t>(m.cols()));
  const auto* p = reinterpret_cast<const std::uint8_t*>(m.data());
  out.insert(out.end(), p, p + m.size() * sizeof(T));
  return out;
}

template <class T>
void decode_tensor(const Bytes& in, Mat<T>& m, const std::string& name) {
  if (in.size() < 16 || std::memcmp(in.data(), "STEN", 4) != 0 || get_u32(in, 4) != sizeof(T))
    throw Error(Errc::decode_error, "bad tensor file for " + name);
  const auto rows = get_u32(in, 8), cols = get_u32(in, 12);
  if (rows != m.rows() || cols != m.cols() || in.size() != 16 + std::size_t{rows} * cols * sizeof(T))
    throw Error(Errc::shape_error, "tensor " + name + " has unexpected shape");
  std::memcpy(m.data(), in.data() + 16, in.size() - 16);
}

template <class T>
nlohmann::json checkpoint_meta(const GenState<T>& s) {
  nlohmann::json arch = s.arch;
  return nlohmann::json{{"format", 1},
                        {"dtype_bytes", sizeof(T)},
                        {"arch", arch},
                        {"vocabulary", s.vocab.words()},
                        {"stage", s.stage},
                        {"iteration", s.iteration},
                        {"seed", s.seed},
                        {"config_hash", s.config_hash},
                        {"optimizer_rule", s.optimizer_rule}};
}

}  // namespace detail

// SHA-256 over the metadata and every tensor in parameter order.
template <class T>
std::string state_digest(const GenState<T>& state) {
  Sha256 h;
  h.update(detail::checkpoint_meta(state).dump());
  for (auto& [name, m] : const_cast<GenState<T>&>(state).nets.named()) {
    h.update(name);
    const Bytes b = detail::encode_tensor(*m);
    h.update(std::span<const std::uint8_t>(b));
  }
  return h.hex_digest();
}

template <class T>
void save_checkpoint(const GenState<T>& state, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir / "tensors");
  for (auto& [name, m] : const_cast<GenState<T>&>(state).nets.named())
    write_file_atomic(dir / "tensors" / (name + ".bin"), detail::encode_tensor(*m));
  write_file_atomic(dir / "meta.json", detail::checkpoint_meta(state).dump(2) + "\n");
}

template <class T>
GenState<T> load_checkpoint(const std::filesystem::path& dir) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(read_text_file(dir / "meta.json"));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::decode_error, std::string("checkpoint metadata: ") + e.what());
  }
  if (meta.value("dtype_bytes", 0u) != sizeof(T)) throw Error(Errc::decode_error, "checkpoint precision mismatch");
  GenState<T> s = init_state<T>(meta.at("arch").get<Architecture>(),
                                Vocabulary(meta.at("vocabulary").get<std::vector<std::string>>()), meta.at("seed"));
  const int stage = meta.at("stage");
  for (int m = 1; m <= stage; ++m) init_step_discriminator(s, m);
  s.stage = stage;
  s.iteration = meta.at("iteration");
  s.config_hash = meta.at("config_hash");
  s.optimizer_rule = meta.at("optimizer_rule");
  for (auto& [name, m] : s.nets.named()) detail::decode_tensor(read_file(dir / "tensors" / (name + ".bin")), *m, name);
  return s;
}

}  // namespace studio::tivgan
