#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "consensus/embedding.hpp"
#include "consensus/orchestrator.hpp"

namespace consensus {

// Everything a batch run needs, assembled from (highest precedence first)
// command-line flags, environment variables, then the JSON config file.
struct RunManifest {
  enum class ProviderMode { scripted, remote };

  std::string topics_path;
  std::vector<std::string> topic_ids;  // empty = every topic
  std::string category;                // optional category filter
  CultureId culture_a{"culture_a", "Culture A"};
  CultureId culture_b{"culture_b", "Culture B"};
  std::string out_dir = "out";
  ProviderMode provider = ProviderMode::scripted;
  std::uint64_t seed = 0;  // fixes every stochastic choice in scripted mode
  int jobs = 1;            // worker-pool bound for batch negotiation

  GameConfig game;
  EmbedderSpec embedder;

  // Remote-provider settings; environment overrides the config file, flags
  // override both.
  std::string base_url;
  std::string api_key;
  std::string model;

  void validate() const;
};

RunManifest::ProviderMode parse_provider_mode(const std::string& name);

// Reads the JSON config file (all fields optional) into a default manifest.
RunManifest manifest_from_config_file(const std::string& path);

// Applies CONSENSUS_API_KEY / CONSENSUS_BASE_URL when set.
void apply_environment(RunManifest& manifest);

}  // namespace consensus
