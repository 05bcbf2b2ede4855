#pragma once

#include <string>

#include "consensus/errors.hpp"

namespace consensus {

// Whole-file read; throws IoError with the path in the message.
std::string read_file(const std::string& path);

// Atomic write: temp file in the target directory, then rename. Interrupted
// runs never leave torn artifacts.
void atomic_write_file(const std::string& path, const std::string& content);

// mkdir -p semantics; throws IoError on failure.
void ensure_directory(const std::string& path);

// Asset resolution: $CONSENSUS_ASSETS when set, otherwise the build-time
// default (the repository's assets/ directory).
std::string asset_root();
std::string load_text_asset(const std::string& relative_path);

}  // namespace consensus
