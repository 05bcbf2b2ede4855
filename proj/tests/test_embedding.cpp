#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "consensus/embedding.hpp"
#include "consensus/errors.hpp"

using namespace consensus;

namespace {

// Independent re-derivation of the documented hashing scheme. Written as a
// single pass over a hand-tokenized feature list so a shared bug with the
// production code is unlikely.
std::uint64_t oracle_fnv(const std::string& s) {
  std::uint64_t h = 14695981039346656037ull;  // 0xcbf29ce484222325
  for (std::size_t i = 0; i < s.size(); ++i) {
    h = (h ^ static_cast<unsigned char>(s[i])) * 0x100000001b3ull;
  }
  return h;
}

std::vector<double> oracle_embed(const std::vector<std::string>& tokens) {
  std::vector<std::string> features = tokens;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    features.push_back(tokens[i - 1] + " " + tokens[i]);
  }
  std::vector<double> v(256, 0.0);
  for (const auto& f : features) {
    std::uint64_t h = oracle_fnv(f);
    v[h % 256] += (h & 0x8000000000000000ull) ? -1.0 : 1.0;
  }
  double ss = 0.0;
  for (double x : v) ss += x * x;
  double n = std::sqrt(ss);
  for (double& x : v) x /= n;
  return v;
}

}  // namespace

TEST_CASE("fnv1a64 matches published test vectors") {
  // Reference digests for the canonical 64-bit FNV-1a parameters.
  CHECK(HashedNgramEmbedder::fnv1a64("") == 14695981039346656037ull);
  CHECK(HashedNgramEmbedder::fnv1a64("a") == 0xaf63dc4c8601ec8cull);
  CHECK(HashedNgramEmbedder::fnv1a64("foobar") == 0x85944171f73967e8ull);
}

TEST_CASE("tokenizer lowercases and splits on non-alphanumerics") {
  auto t = HashedNgramEmbedder::tokenize("Hello, World! 42-x");
  REQUIRE(t.size() == 4);
  CHECK(t[0] == "hello");
  CHECK(t[1] == "world");
  CHECK(t[2] == "42");
  CHECK(t[3] == "x");

  CHECK(HashedNgramEmbedder::tokenize("...").empty());
  CHECK(HashedNgramEmbedder::tokenize("a").size() == 1);
}

TEST_CASE("embedding matches an independently recomputed oracle") {
  HashedNgramEmbedder e;
  // Tokens written out by hand for each input, not via the tokenizer under
  // test.
  struct Case {
    std::string text;
    std::vector<std::string> tokens;
  };
  std::vector<Case> cases = {
      {"Hello, World!", {"hello", "world"}},
      {"We should respect individual autonomy.", {"we", "should", "respect", "individual", "autonomy"}},
      {"one", {"one"}},
      {"A b C d E", {"a", "b", "c", "d", "e"}},
  };
  for (const auto& c : cases) {
    CAPTURE(c.text);
    auto got = e.embed(c.text);
    auto want = oracle_embed(c.tokens);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("embeddings are unit norm and deterministic") {
  HashedNgramEmbedder e;
  std::mt19937_64 rng(99);
  const std::string words[] = {"alpha", "beta", "gamma", "delta", "omega", "42", "x9"};
  for (int trial = 0; trial < 50; ++trial) {
    std::string text;
    int n = 1 + static_cast<int>(rng() % 12);
    for (int i = 0; i < n; ++i) {
      if (i) text += ' ';
      text += words[rng() % 7];
    }
    auto a = e.embed(text);
    auto b = e.embed(text);
    CHECK(a == b);  // bitwise reproducible
    double ss = 0.0;
    for (double x : a) ss += x * x;
    CHECK(ss == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(a.size() == 256);
  }
}

TEST_CASE("unigrams and bigrams both contribute") {
  HashedNgramEmbedder e;
  // "a b" vs "b a": same unigrams, different bigram -> different vectors.
  auto ab = e.embed("a b");
  auto ba = e.embed("b a");
  CHECK(ab != ba);
  // Identical token stream through different separators -> identical vector.
  CHECK(e.embed("a,b") == ab);
  CHECK(e.embed("A   B!!") == ab);
}

TEST_CASE("empty or untokenizable text is rejected") {
  HashedNgramEmbedder e;
  CHECK_THROWS_AS(e.embed(""), InvalidInputError);
  CHECK_THROWS_AS(e.embed("   \t\n"), InvalidInputError);
  CHECK_THROWS_AS(e.embed("!?!? ---"), InvalidInputError);
}

TEST_CASE("batch embedding equals per-text embedding") {
  HashedNgramEmbedder e;
  std::vector<std::string> texts = {"first text", "second text", "third one"};
  auto batch = e.embed_batch(texts);
  REQUIRE(batch.size() == 3);
  for (std::size_t i = 0; i < texts.size(); ++i) CHECK(batch[i] == e.embed(texts[i]));
}

TEST_CASE("cosine similarity basics") {
  Embedding x = {1.0, 0.0};
  Embedding y = {0.0, 1.0};
  Embedding z = {-1.0, 0.0};
  CHECK(cosine_similarity(x, x) == doctest::Approx(1.0));
  CHECK(cosine_similarity(x, y) == doctest::Approx(0.0));
  CHECK(cosine_similarity(x, z) == doctest::Approx(-1.0));
  // Scale invariance.
  Embedding x3 = {3.0, 0.0};
  CHECK(cosine_similarity(x3, y) == doctest::Approx(0.0));
  CHECK(cosine_similarity(x3, x) == doctest::Approx(1.0));

  CHECK_THROWS_AS(cosine_similarity(x, Embedding{1.0, 0.0, 0.0}), InvalidInputError);
  CHECK_THROWS_AS(cosine_similarity(Embedding{}, Embedding{}), InvalidInputError);
  CHECK_THROWS_AS(cosine_similarity(Embedding{0.0, 0.0}, x), InvalidInputError);
}

TEST_CASE("cosine similarity is symmetric on hashed embeddings") {
  HashedNgramEmbedder e;
  auto a = e.embed("shared family obligations matter");
  auto b = e.embed("individual freedom matters most");
  CHECK(cosine_similarity(a, b) == cosine_similarity(b, a));
  CHECK(cosine_similarity(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(cosine_similarity(a, b)) <= 1.0 + 1e-12);
}

TEST_CASE("token overlap raises similarity") {
  HashedNgramEmbedder e;
  auto base = e.embed("children should support their aging parents at home");
  auto near = e.embed("children should support their aging parents financially");
  auto far = e.embed("quarterly tax filings require digital signatures now");
  CHECK(cosine_similarity(base, near) > cosine_similarity(base, far));
  CHECK(cosine_similarity(base, near) > 0.5);
}
