#include "consensus/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace consensus {

namespace fs = std::filesystem;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) throw IoError("cannot read file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError("read failed: " + path);
  return buf.str();
}

void atomic_write_file(const std::string& path, const std::string& content) {
  fs::path target(path);
  fs::path dir = target.parent_path();
  if (!dir.empty()) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
  }
  fs::path temp = target;
  temp += ".tmp";
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    if (!out.good()) throw IoError("cannot write file: " + temp.string());
    out << content;
    out.flush();
    if (!out.good()) throw IoError("write failed: " + temp.string());
  }
  std::error_code ec;
  fs::rename(temp, target, ec);
  if (ec) {
    fs::remove(temp);
    throw IoError("cannot rename " + temp.string() + " to " + path + ": " + ec.message());
  }
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  fs::create_directories(path, ec);
  if (ec) throw IoError("cannot create directory " + path + ": " + ec.message());
}

std::string asset_root() {
  if (const char* env = std::getenv("CONSENSUS_ASSETS"); env && *env) return env;
#ifdef CONSENSUS_DEFAULT_ASSET_DIR
  return CONSENSUS_DEFAULT_ASSET_DIR;
#else
  return "assets";
#endif
}

std::string load_text_asset(const std::string& relative_path) {
  return read_file(asset_root() + "/" + relative_path);
}

}  // namespace consensus
