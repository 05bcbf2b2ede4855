#pragma once

#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "consensus/errors.hpp"
#include "consensus/http.hpp"
#include "consensus/values.hpp"

namespace consensus {

struct ChatMessage {
  std::string role;  // "system" | "user" | "assistant"
  std::string content;
};

struct ChatRequest {
  std::string system_prompt;
  std::vector<ChatMessage> messages;  // non-empty, roles from the closed set
  double temperature = 0.0;
  int max_tokens = 1024;
  // Routing key for scripted stand-ins and transcript labelling, conventionally
  // "<culture>/round<r>/<stage>". Remote adapters ignore it.
  std::string tag;

  void validate() const;
};

struct TokenLogProbs {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;  // natural log, parallel to tokens

  void validate() const;  // equal lengths, at least one token
};

class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string chat_complete(const ChatRequest& req) = 0;
};

class LogProbProvider {
 public:
  virtual ~LogProbProvider() = default;
  // Per-token log-probabilities of continuation given context.
  virtual TokenLogProbs score_logprobs(const std::string& context,
                                       const std::string& continuation) = 0;
};

class ValueJudge {
 public:
  virtual ~ValueJudge() = default;
  virtual ValueVector judge_value_vector(const std::string& response_text) = 0;
};

// --- Scripted stand-ins (tests and offline runs) ---------------------------

// Replays queued responses. A request whose tag has a registered queue pops
// from that queue; anything else pops from the default queue. An empty queue
// is a test-configuration bug and throws ScriptError. Every request is
// recorded for assertions.
class ScriptedChatProvider final : public ChatProvider {
 public:
  void push(std::string response);
  void push_for(const std::string& tag, std::string response);

  std::string chat_complete(const ChatRequest& req) override;

  const std::vector<ChatRequest>& requests() const { return requests_; }

 private:
  std::deque<std::string> default_queue_;
  std::map<std::string, std::deque<std::string>> tagged_queues_;
  std::vector<ChatRequest> requests_;
};

// Procedural, seed-deterministic responder for demo/e2e runs. Understands the
// orchestrator's tag convention and always produces parseable output: claim
// triples in the candidate wire format for generation stages, plain prose for
// speeches and responses. Never exhausts.
class SyntheticChatProvider final : public ChatProvider {
 public:
  explicit SyntheticChatProvider(std::uint64_t seed) : seed_(seed) {}

  std::string chat_complete(const ChatRequest& req) override;

 private:
  std::uint64_t seed_;
};

// Character-bigram language model with add-one smoothing over all 256 byte
// values, fit on a fixed corpus. Tokens are single characters; the first
// continuation character conditions on the last context character (or on the
// corpus-wide unigram distribution when the context is empty). Deterministic.
class BigramLogProbProvider final : public LogProbProvider {
 public:
  static const char* default_corpus();
  explicit BigramLogProbProvider(std::string corpus = default_corpus());

  TokenLogProbs score_logprobs(const std::string& context,
                               const std::string& continuation) override;

  // log p(next | prev); exposed so tests can recompute scores by hand.
  double log_prob(unsigned char prev, unsigned char next) const;
  double log_prob_initial(unsigned char next) const;

 private:
  std::array<std::array<std::uint32_t, 256>, 256> pair_counts_{};
  std::array<std::uint32_t, 256> prefix_counts_{};  // occurrences as a pair prefix
  std::array<std::uint32_t, 256> unigram_counts_{};
  std::uint64_t total_chars_ = 0;
};

// Table-driven judge keyed by exact response text; a missing key throws
// ScriptError.
class ScriptedValueJudge final : public ValueJudge {
 public:
  void set(const std::string& text, const ValueVector& v);
  ValueVector judge_value_vector(const std::string& response_text) override;

 private:
  std::map<std::string, ValueVector> table_;
};

// Hash-derived stance vector; deterministic stand-in for pipeline runs.
class SyntheticValueJudge final : public ValueJudge {
 public:
  explicit SyntheticValueJudge(std::uint64_t seed = 0) : seed_(seed) {}
  ValueVector judge_value_vector(const std::string& response_text) override;

 private:
  std::uint64_t seed_;
};

// Judges by prompting a chat provider with a fixed rubric over the canonical
// Schwartz order and parsing a strict 10-token {-1,0,+1} answer. Re-asks up
// to 2 times on unparseable output, then throws JudgeError with the raw text.
class RubricValueJudge final : public ValueJudge {
 public:
  explicit RubricValueJudge(std::shared_ptr<ChatProvider> chat, std::string rubric);

  ValueVector judge_value_vector(const std::string& response_text) override;

  // Strict parser: exactly 10 whitespace-separated tokens from {-1,0,+1}.
  // Returns false without touching out on any violation.
  static bool parse_stances(const std::string& text, ValueVector& out);

 private:
  std::shared_ptr<ChatProvider> chat_;
  std::string rubric_;
};

// --- Remote adapters --------------------------------------------------------

// Chat-completions wire client:
//   POST {model, messages:[{role,content}], temperature, max_tokens, logprobs?}
//   <-   {choices:[{message:{content}, logprobs?:{content:[{token, logprob}]}}]}
// Log-prob scoring sends the continuation as a prefilled assistant turn with
// logprobs on; a response without logprobs raises CapabilityError.
class RemoteChatProvider final : public ChatProvider, public LogProbProvider {
 public:
  RemoteChatProvider(std::shared_ptr<HttpTransport> transport, std::string model,
                     RetryPolicy retry = {},
                     std::string chat_path = "/v1/chat/completions");

  std::string chat_complete(const ChatRequest& req) override;
  TokenLogProbs score_logprobs(const std::string& context,
                               const std::string& continuation) override;

 private:
  std::string post_chat(const std::string& body);

  std::shared_ptr<HttpTransport> transport_;
  std::string model_;
  RetryPolicy retry_;
  std::string chat_path_;
};

}  // namespace consensus
