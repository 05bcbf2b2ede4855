#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "consensus/errors.hpp"
#include "consensus/http.hpp"

namespace consensus {

using Embedding = std::vector<double>;

// dot(a, b) / (|a| |b|). Throws InvalidInputError on dimension mismatch or a
// zero-norm argument. Symmetric by construction (same accumulation order).
double cosine_similarity(const Embedding& a, const Embedding& b);

class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dimension() const = 0;

  // Maps text to a unit-L2-norm vector of dimension(). Throws
  // InvalidInputError when the text is empty after whitespace trimming.
  virtual Embedding embed(const std::string& text) = 0;

  // Batched convenience; the remote adapter overrides this with one request.
  virtual std::vector<Embedding> embed_batch(const std::vector<std::string>& texts);
};

// Offline, fully deterministic embedder backed by signed feature hashing.
//
// Scheme (fixed; tests recompute it independently):
//   1. lowercase ASCII bytes; any byte outside [a-z0-9] separates tokens
//   2. features = every token, plus every adjacent pair joined by one space
//   3. for each feature, h = FNV-1a 64-bit over its bytes;
//      bucket = h mod 256, sign = -1 if the top bit of h is set else +1
//   4. accumulate signs into buckets, then L2-normalize
class HashedNgramEmbedder final : public EmbeddingProvider {
 public:
  static constexpr std::size_t kDimension = 256;

  std::size_t dimension() const override { return kDimension; }
  Embedding embed(const std::string& text) override;

  static std::uint64_t fnv1a64(const std::string& bytes);
  static std::vector<std::string> tokenize(const std::string& text);
};

// Adapter for an HTTP JSON embeddings endpoint:
//   request  {"model": ..., "input": [texts]}
//   response {"data": [{"index": i, "embedding": [floats]}]}
// Responses are L2-normalized before being returned or cached. Results are
// cached by exact text key; the cache can persist to a JSONL sidecar file
// (one {"text", "embedding"} object per line, last writer wins on load).
class RemoteEmbedder final : public EmbeddingProvider {
 public:
  RemoteEmbedder(std::shared_ptr<HttpTransport> transport, std::string model,
                 std::size_t dimension, std::string cache_path = "",
                 RetryPolicy retry = {});

  std::size_t dimension() const override { return dim_; }
  Embedding embed(const std::string& text) override;
  std::vector<Embedding> embed_batch(const std::vector<std::string>& texts) override;

 private:
  std::vector<Embedding> fetch(const std::vector<std::string>& texts);
  void load_cache();
  void append_to_sidecar(const std::string& text, const Embedding& vec);

  std::shared_ptr<HttpTransport> transport_;
  std::string model_;
  std::size_t dim_;
  std::string cache_path_;
  RetryPolicy retry_;
  std::mutex mu_;  // guards cache_ and sidecar appends
  std::unordered_map<std::string, Embedding> cache_;
};

struct EmbedderSpec {
  enum class Kind { deterministic, remote };

  Kind kind = Kind::deterministic;
  std::size_t dimension = HashedNgramEmbedder::kDimension;
  // remote-only:
  std::string base_url;
  std::string model;
  std::string api_key;
  std::string cache_path;

  void validate() const;  // dimension >= 8; deterministic dimension fixed at 256
};

std::unique_ptr<EmbeddingProvider> make_embedder(const EmbedderSpec& spec);

}  // namespace consensus
