#include "studio/io.hpp"

#include <atomic>
#include <fstream>
#include <iterator>
#include <sstream>
#include <thread>

#include "studio/error.hpp"

namespace studio {

namespace fs = std::filesystem;

Bytes read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_text_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::not_found, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

namespace {

std::atomic<std::uint64_t> g_temp_counter{0};

void write_raw_atomic(const fs::path& path, const char* data, std::size_t size) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ostringstream name;
  name << path.filename().string() << ".tmp." << std::hash<std::thread::id>{}(std::this_thread::get_id())
       << "." << g_temp_counter.fetch_add(1);
  const fs::path tmp = path.parent_path() / name.str();
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(Errc::io_error, "cannot write " + tmp.string());
    out.write(data, static_cast<std::streamsize>(size));
    if (!out) throw Error(Errc::io_error, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp);
    throw Error(Errc::io_error, "cannot rename onto " + path.string() + ": " + ec.message());
  }
}

}  // namespace

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  write_raw_atomic(path, reinterpret_cast<const char*>(bytes.data()), bytes.size());
}

void write_file_atomic(const fs::path& path, std::string_view text) {
  write_raw_atomic(path, text.data(), text.size());
}

}  // namespace studio
