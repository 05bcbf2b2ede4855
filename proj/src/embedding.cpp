#include "consensus/embedding.hpp"

#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "consensus/io.hpp"

namespace consensus {

namespace {

bool is_blank(const std::string& s) {
  for (char c : s) {
    if (!std::isspace(static_cast<unsigned char>(c))) return false;
  }
  return true;
}

double l2_norm(const Embedding& v) {
  double acc = 0.0;
  for (double x : v) acc += x * x;
  return std::sqrt(acc);
}

void normalize_in_place(Embedding& v, const char* what) {
  double norm = l2_norm(v);
  if (!(norm > 0.0) || !std::isfinite(norm)) {
    throw InvalidInputError(std::string(what) + ": cannot normalize a zero or non-finite vector");
  }
  for (double& x : v) x /= norm;
}

}  // namespace

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.size() != b.size()) {
    throw InvalidInputError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()) + ")");
  }
  if (a.empty()) throw InvalidInputError("cosine_similarity: empty vectors");
  // Bitwise-equal vectors have cosine exactly 1; the sqrt round-trip below
  // would otherwise perturb that by an ulp, and downstream contracts require
  // the self-similarity case to be exact.
  if (a == b) {
    double norm_sq = 0.0;
    for (double x : a) norm_sq += x * x;
    if (!(norm_sq > 0.0)) throw InvalidInputError("cosine_similarity: zero-norm vector");
    if (!std::isfinite(norm_sq)) throw InvalidInputError("cosine_similarity: non-finite input");
    return 1.0;
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) {
    throw InvalidInputError("cosine_similarity: zero-norm vector");
  }
  double value = dot / (std::sqrt(na) * std::sqrt(nb));
  if (!std::isfinite(value)) throw InvalidInputError("cosine_similarity: non-finite result");
  return value;
}

std::vector<Embedding> EmbeddingProvider::embed_batch(const std::vector<std::string>& texts) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(embed(t));
  return out;
}

// --- HashedNgramEmbedder ----------------------------------------------------

std::uint64_t HashedNgramEmbedder::fnv1a64(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::vector<std::string> HashedNgramEmbedder::tokenize(const std::string& text) {
  std::vector<std::string> tokens;
  std::string current;
  for (unsigned char c : text) {
    unsigned char lc = static_cast<unsigned char>(std::tolower(c));
    bool alnum = (lc >= 'a' && lc <= 'z') || (lc >= '0' && lc <= '9');
    if (alnum) {
      current.push_back(static_cast<char>(lc));
    } else if (!current.empty()) {
      tokens.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) tokens.push_back(std::move(current));
  return tokens;
}

Embedding HashedNgramEmbedder::embed(const std::string& text) {
  if (is_blank(text)) throw InvalidInputError("embed: empty text");
  std::vector<std::string> tokens = tokenize(text);
  if (tokens.empty()) throw InvalidInputError("embed: no embeddable tokens in text");

  Embedding v(kDimension, 0.0);
  auto add_feature = [&v](const std::string& feature) {
    std::uint64_t h = fnv1a64(feature);
    std::size_t bucket = static_cast<std::size_t>(h % kDimension);
    double sign = (h >> 63) ? -1.0 : 1.0;
    v[bucket] += sign;
  };
  for (const auto& t : tokens) add_feature(t);
  for (std::size_t i = 0; i + 1 < tokens.size(); ++i) add_feature(tokens[i] + " " + tokens[i + 1]);

  // Signed buckets can cancel to zero in adversarial cases; nudge via the
  // token count so every tokenizable text embeds. Deterministic.
  if (l2_norm(v) == 0.0) v[tokens.size() % kDimension] = 1.0;
  normalize_in_place(v, "embed");
  return v;
}

// --- RemoteEmbedder ---------------------------------------------------------

RemoteEmbedder::RemoteEmbedder(std::shared_ptr<HttpTransport> transport, std::string model,
                               std::size_t dimension, std::string cache_path, RetryPolicy retry)
    : transport_(std::move(transport)),
      model_(std::move(model)),
      dim_(dimension),
      cache_path_(std::move(cache_path)),
      retry_(std::move(retry)) {
  if (!transport_) throw InvalidInputError("RemoteEmbedder: null transport");
  if (dim_ < 8) throw InvalidInputError("RemoteEmbedder: dimension must be >= 8");
  load_cache();
}

Embedding RemoteEmbedder::embed(const std::string& text) {
  return embed_batch({text}).front();
}

std::vector<Embedding> RemoteEmbedder::embed_batch(const std::vector<std::string>& texts) {
  std::vector<Embedding> out(texts.size());
  std::vector<std::size_t> miss_indices;
  std::vector<std::string> miss_texts;
  {
    std::lock_guard<std::mutex> lock(mu_);
    for (std::size_t i = 0; i < texts.size(); ++i) {
      if (is_blank(texts[i])) throw InvalidInputError("embed: empty text");
      auto it = cache_.find(texts[i]);
      if (it != cache_.end()) {
        out[i] = it->second;
      } else {
        miss_indices.push_back(i);
        miss_texts.push_back(texts[i]);
      }
    }
  }
  if (miss_texts.empty()) return out;

  std::vector<Embedding> fetched = fetch(miss_texts);
  std::lock_guard<std::mutex> lock(mu_);
  for (std::size_t k = 0; k < miss_indices.size(); ++k) {
    cache_[miss_texts[k]] = fetched[k];  // last writer wins on races
    append_to_sidecar(miss_texts[k], fetched[k]);
    out[miss_indices[k]] = std::move(fetched[k]);
  }
  return out;
}

std::vector<Embedding> RemoteEmbedder::fetch(const std::vector<std::string>& texts) {
  nlohmann::json body = {{"model", model_}, {"input", texts}};
  HttpResponse resp = post_with_retry(*transport_, "/v1/embeddings", body.dump(), retry_);

  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(resp.body);
  } catch (const nlohmann::json::exception& e) {
    throw ProviderError(std::string("embeddings response is not JSON: ") + e.what());
  }
  if (!doc.contains("data") || !doc["data"].is_array() || doc["data"].size() != texts.size()) {
    throw ProviderError("embeddings response missing data for every input");
  }
  std::vector<Embedding> out(texts.size());
  for (const auto& item : doc["data"]) {
    std::size_t index = item.at("index").get<std::size_t>();
    if (index >= out.size()) throw ProviderError("embeddings response index out of range");
    Embedding vec = item.at("embedding").get<Embedding>();
    if (vec.size() != dim_) {
      throw ProviderError("embedding dimension " + std::to_string(vec.size()) +
                          " does not match configured " + std::to_string(dim_));
    }
    normalize_in_place(vec, "remote embedding");
    out[index] = std::move(vec);
  }
  return out;
}

void RemoteEmbedder::load_cache() {
  if (cache_path_.empty()) return;
  std::ifstream in(cache_path_);
  if (!in.good()) return;  // cache file appears on first write
  std::string line;
  while (std::getline(in, line)) {
    if (is_blank(line)) continue;
    try {
      nlohmann::json entry = nlohmann::json::parse(line);
      Embedding vec = entry.at("embedding").get<Embedding>();
      if (vec.size() == dim_) cache_[entry.at("text").get<std::string>()] = std::move(vec);
    } catch (const nlohmann::json::exception&) {
      // A torn trailing line from an interrupted run is not an error; the
      // entry is simply re-fetched.
    }
  }
}

void RemoteEmbedder::append_to_sidecar(const std::string& text, const Embedding& vec) {
  if (cache_path_.empty()) return;
  nlohmann::json entry = {{"text", text}, {"embedding", vec}};
  std::ofstream out(cache_path_, std::ios::app);
  if (!out.good()) throw IoError("cannot append to embedding cache: " + cache_path_);
  out << entry.dump() << "\n";
}

// --- factory ----------------------------------------------------------------

void EmbedderSpec::validate() const {
  if (dimension < 8) throw InvalidInputError("embedder dimension must be >= 8");
  if (kind == Kind::deterministic && dimension != HashedNgramEmbedder::kDimension) {
    throw InvalidInputError("deterministic embedder dimension is fixed at " +
                            std::to_string(HashedNgramEmbedder::kDimension));
  }
  if (kind == Kind::remote && base_url.empty()) {
    throw InvalidInputError("remote embedder requires a base URL");
  }
}

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderSpec& spec) {
  spec.validate();
  if (spec.kind == EmbedderSpec::Kind::deterministic) {
    return std::make_unique<HashedNgramEmbedder>();
  }
  auto transport = make_httplib_transport(spec.base_url, spec.api_key);
  return std::make_unique<RemoteEmbedder>(std::move(transport), spec.model, spec.dimension,
                                          spec.cache_path);
}

}  // namespace consensus
