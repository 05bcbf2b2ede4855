#include "consensus/manifest.hpp"

#include <cstdlib>

#include <json.hpp>

#include "consensus/io.hpp"

namespace consensus {

namespace {

template <typename T>
void read_into(const nlohmann::json& j, const char* key, T& out) {
  auto it = j.find(key);
  if (it != j.end()) out = it->get<T>();
}

}  // namespace

void RunManifest::validate() const {
  culture_a.validate();
  culture_b.validate();
  if (culture_a.id == culture_b.id) {
    throw InvalidInputError("manifest cultures must have distinct ids");
  }
  if (out_dir.empty()) throw InvalidInputError("manifest out_dir must be non-empty");
  if (jobs < 1) throw InvalidInputError("manifest jobs must be >= 1");
  game.validate();
  embedder.validate();
  if (provider == ProviderMode::remote) {
    if (base_url.empty()) throw InvalidInputError("remote provider requires a base URL");
    if (model.empty()) throw InvalidInputError("remote provider requires a model name");
  }
}

RunManifest::ProviderMode parse_provider_mode(const std::string& name) {
  if (name == "scripted") return RunManifest::ProviderMode::scripted;
  if (name == "remote") return RunManifest::ProviderMode::remote;
  throw InvalidInputError("unknown provider mode '" + name + "' (scripted|remote)");
}

RunManifest manifest_from_config_file(const std::string& path) {
  RunManifest m;
  if (path.empty()) return m;

  nlohmann::json doc = nlohmann::json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded() || !doc.is_object()) {
    throw FormatError("config file '" + path + "' is not a JSON object");
  }

  read_into(doc, "topics", m.topics_path);
  read_into(doc, "topic_ids", m.topic_ids);
  read_into(doc, "category", m.category);
  read_into(doc, "out", m.out_dir);
  read_into(doc, "seed", m.seed);
  read_into(doc, "jobs", m.jobs);
  if (doc.contains("provider")) {
    m.provider = parse_provider_mode(doc["provider"].get<std::string>());
  }
  if (doc.contains("culture_a")) {
    read_into(doc["culture_a"], "id", m.culture_a.id);
    read_into(doc["culture_a"], "display_name", m.culture_a.display_name);
  }
  if (doc.contains("culture_b")) {
    read_into(doc["culture_b"], "id", m.culture_b.id);
    read_into(doc["culture_b"], "display_name", m.culture_b.display_name);
  }

  if (doc.contains("game")) {
    const auto& g = doc["game"];
    read_into(g, "max_rounds", m.game.max_rounds);
    read_into(g, "initial_guidelines", m.game.initial_guidelines);
    if (g.contains("utility")) {
      const auto& u = g["utility"];
      read_into(u, "alpha", m.game.utility.alpha);
      read_into(u, "beta", m.game.utility.beta);
      read_into(u, "gamma_nov", m.game.utility.gamma_nov);
      read_into(u, "epsilon", m.game.utility.epsilon);
    }
    if (g.contains("solver")) {
      const auto& s = g["solver"];
      read_into(s, "eta", m.game.solver.eta);
      read_into(s, "max_iters", m.game.solver.max_iters);
      read_into(s, "tolerance", m.game.solver.tolerance);
      read_into(s, "smoothing_gamma", m.game.solver.smoothing_gamma);
      read_into(s, "last_iterate", m.game.solver.last_iterate);
    }
    if (g.contains("oracle")) {
      read_into(g["oracle"], "per_mode_count", m.game.oracle.per_mode_count);
    }
  }

  if (doc.contains("embedder")) {
    const auto& e = doc["embedder"];
    std::string kind = "deterministic";
    read_into(e, "kind", kind);
    if (kind == "deterministic") {
      m.embedder.kind = EmbedderSpec::Kind::deterministic;
    } else if (kind == "remote") {
      m.embedder.kind = EmbedderSpec::Kind::remote;
    } else {
      throw InvalidInputError("unknown embedder kind '" + kind + "' (deterministic|remote)");
    }
    read_into(e, "dimension", m.embedder.dimension);
    read_into(e, "base_url", m.embedder.base_url);
    read_into(e, "model", m.embedder.model);
    read_into(e, "api_key", m.embedder.api_key);
    read_into(e, "cache_path", m.embedder.cache_path);
  }

  read_into(doc, "base_url", m.base_url);
  read_into(doc, "api_key", m.api_key);
  read_into(doc, "model", m.model);
  return m;
}

void apply_environment(RunManifest& manifest) {
  if (const char* key = std::getenv("CONSENSUS_API_KEY"); key != nullptr && *key != '\0') {
    manifest.api_key = key;
    if (manifest.embedder.api_key.empty()) manifest.embedder.api_key = key;
  }
  if (const char* url = std::getenv("CONSENSUS_BASE_URL"); url != nullptr && *url != '\0') {
    manifest.base_url = url;
    if (manifest.embedder.base_url.empty()) manifest.embedder.base_url = url;
  }
}

}  // namespace consensus
