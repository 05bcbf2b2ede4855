#include "consensus/providers.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

namespace consensus {

namespace {

std::uint64_t fnv1a64(std::uint64_t h, const std::string& s) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t mix(std::uint64_t seed, const std::string& a, const std::string& b,
                  std::uint64_t salt) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  h = fnv1a64(h, a);
  h ^= salt;
  h *= 1099511628211ull;
  return fnv1a64(h, b);
}

}  // namespace

void ChatRequest::validate() const {
  if (messages.empty()) throw InvalidInputError("ChatRequest: no messages");
  for (const auto& m : messages) {
    if (m.role != "system" && m.role != "user" && m.role != "assistant") {
      throw InvalidInputError("ChatRequest: unknown role '" + m.role + "'");
    }
  }
  if (!(temperature >= 0.0) || !std::isfinite(temperature)) {
    throw InvalidInputError("ChatRequest: temperature must be finite and >= 0");
  }
  if (max_tokens < 0) throw InvalidInputError("ChatRequest: max_tokens must be >= 0");
}

void TokenLogProbs::validate() const {
  if (tokens.empty()) throw InvalidInputError("TokenLogProbs: empty");
  if (tokens.size() != logprobs.size()) {
    throw InvalidInputError("TokenLogProbs: tokens and logprobs must be parallel");
  }
  for (double lp : logprobs) {
    if (!std::isfinite(lp)) throw InvalidInputError("TokenLogProbs: non-finite logprob");
  }
}

// --- ScriptedChatProvider ----------------------------------------------------

void ScriptedChatProvider::push(std::string response) {
  default_queue_.push_back(std::move(response));
}

void ScriptedChatProvider::push_for(const std::string& tag, std::string response) {
  tagged_queues_[tag].push_back(std::move(response));
}

std::string ScriptedChatProvider::chat_complete(const ChatRequest& req) {
  req.validate();
  requests_.push_back(req);
  auto it = tagged_queues_.find(req.tag);
  if (it != tagged_queues_.end()) {
    if (it->second.empty()) {
      throw ScriptError("scripted queue for tag '" + req.tag + "' is exhausted");
    }
    std::string out = std::move(it->second.front());
    it->second.pop_front();
    return out;
  }
  if (default_queue_.empty()) {
    throw ScriptError("scripted default queue is exhausted (tag '" + req.tag + "')");
  }
  std::string out = std::move(default_queue_.front());
  default_queue_.pop_front();
  return out;
}

// --- SyntheticChatProvider ---------------------------------------------------

namespace {

const char* kSynthTopics[] = {"dialogue", "fairness", "tradition", "autonomy", "community",
                              "stability", "openness", "duty", "wellbeing", "trust"};
const char* kSynthVerbs[] = {"prioritize", "balance", "protect", "encourage", "respect",
                             "limit", "share", "review", "support", "clarify"};
const char* kSynthObjects[] = {"family obligations", "individual choice", "public debate",
                               "local customs", "mutual aid", "institutional rules",
                               "open inquiry", "collective decisions", "personal privacy",
                               "civic participation"};

std::string synth_sentence(std::uint64_t h) {
  std::ostringstream out;
  out << "We should " << kSynthVerbs[(h >> 8) % 10] << " " << kSynthObjects[(h >> 16) % 10]
      << " while keeping " << kSynthTopics[(h >> 24) % 10] << " in view";
  return out.str();
}

// First integer following the phrase "exactly " in the text, if any.
int parse_requested_count(const std::string& text, int fallback) {
  std::size_t pos = text.find("exactly ");
  if (pos == std::string::npos) return fallback;
  pos += 8;
  int n = 0;
  bool any = false;
  while (pos < text.size() && text[pos] >= '0' && text[pos] <= '9') {
    n = n * 10 + (text[pos] - '0');
    any = true;
    ++pos;
  }
  return (any && n > 0) ? n : fallback;
}

}  // namespace

std::string SyntheticChatProvider::chat_complete(const ChatRequest& req) {
  req.validate();
  const std::string& last = req.messages.back().content;
  std::uint64_t h = mix(seed_, req.tag, last, 0x9e3779b97f4a7c15ull);

  bool wants_candidates =
      req.tag.find("generate") != std::string::npos || last.find("<<<CANDIDATE") != std::string::npos;
  if (wants_candidates) {
    int n = parse_requested_count(last, 2);
    std::ostringstream out;
    for (int i = 0; i < n; ++i) {
      std::uint64_t hi = mix(seed_, req.tag, last, 0xc2b2ae3d27d4eb4full * (i + 1));
      out << "<<<CANDIDATE\n"
          << "CONTENT: " << synth_sentence(hi) << ".\n"
          << "REASON: This follows from weighing " << kSynthTopics[hi % 10] << " against "
          << kSynthTopics[(hi >> 32) % 10] << ".\n"
          << "DESCRIPTION: Adopting it would " << kSynthVerbs[(hi >> 40) % 10] << " "
          << kSynthObjects[(hi >> 48) % 10] << ".\n"
          << ">>>\n";
    }
    return out.str();
  }

  bool wants_stances =
      req.tag.find("judge") != std::string::npos || last.find("exactly 10") != std::string::npos;
  if (wants_stances) {
    std::ostringstream out;
    for (int k = 0; k < 10; ++k) {
      std::uint64_t hk = mix(seed_, req.tag, last, 0x2545f4914f6cdd1dull * (k + 1));
      int stance = static_cast<int>(hk % 3) - 1;
      if (k) out << " ";
      out << (stance > 0 ? "+1" : stance == 0 ? "0" : "-1");
    }
    return out.str();
  }

  return synth_sentence(h) + ", which reflects our position at this stage (" + req.tag + ").";
}

// --- BigramLogProbProvider ---------------------------------------------------

const char* BigramLogProbProvider::default_corpus() {
  return "Cultures meet at the table to negotiate shared guidelines. Each side states a "
         "position, weighs the other side's reasons, and adjusts its emphasis. Consensus "
         "grows when both sides can accept the same wording without giving up what they "
         "value most. Plain language, steady turns, and honest summaries keep the "
         "negotiation moving toward agreement.";
}

BigramLogProbProvider::BigramLogProbProvider(std::string corpus) {
  if (corpus.empty()) throw InvalidInputError("BigramLogProbProvider: empty corpus");
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    auto c = static_cast<unsigned char>(corpus[i]);
    unigram_counts_[c] += 1;
    if (i + 1 < corpus.size()) {
      auto n = static_cast<unsigned char>(corpus[i + 1]);
      pair_counts_[c][n] += 1;
      prefix_counts_[c] += 1;
    }
  }
  total_chars_ = corpus.size();
}

double BigramLogProbProvider::log_prob(unsigned char prev, unsigned char next) const {
  double num = pair_counts_[prev][next] + 1.0;
  double den = prefix_counts_[prev] + 256.0;
  return std::log(num / den);
}

double BigramLogProbProvider::log_prob_initial(unsigned char next) const {
  double num = unigram_counts_[next] + 1.0;
  double den = static_cast<double>(total_chars_) + 256.0;
  return std::log(num / den);
}

TokenLogProbs BigramLogProbProvider::score_logprobs(const std::string& context,
                                                    const std::string& continuation) {
  if (continuation.empty()) {
    throw InvalidInputError("BigramLogProbProvider: empty continuation");
  }
  TokenLogProbs out;
  out.tokens.reserve(continuation.size());
  out.logprobs.reserve(continuation.size());
  for (std::size_t i = 0; i < continuation.size(); ++i) {
    auto next = static_cast<unsigned char>(continuation[i]);
    double lp;
    if (i == 0) {
      lp = context.empty() ? log_prob_initial(next)
                           : log_prob(static_cast<unsigned char>(context.back()), next);
    } else {
      lp = log_prob(static_cast<unsigned char>(continuation[i - 1]), next);
    }
    out.tokens.push_back(std::string(1, continuation[i]));
    out.logprobs.push_back(lp);
  }
  return out;
}

// --- Judges ------------------------------------------------------------------

void ScriptedValueJudge::set(const std::string& text, const ValueVector& v) {
  v.validate();
  table_[text] = v;
}

ValueVector ScriptedValueJudge::judge_value_vector(const std::string& response_text) {
  auto it = table_.find(response_text);
  if (it == table_.end()) {
    throw ScriptError("scripted judge has no entry for the given response text");
  }
  return it->second;
}

ValueVector SyntheticValueJudge::judge_value_vector(const std::string& response_text) {
  ValueVector v;
  for (int k = 0; k < 10; ++k) {
    std::uint64_t h = mix(seed_, response_text, kSchwartzValues[k], 0x9e3779b97f4a7c15ull);
    v.stances[k] = static_cast<int>(h % 3) - 1;
  }
  return v;
}

RubricValueJudge::RubricValueJudge(std::shared_ptr<ChatProvider> chat, std::string rubric)
    : chat_(std::move(chat)), rubric_(std::move(rubric)) {
  if (!chat_) throw InvalidInputError("RubricValueJudge: null chat provider");
  if (rubric_.empty()) throw InvalidInputError("RubricValueJudge: empty rubric");
}

bool RubricValueJudge::parse_stances(const std::string& text, ValueVector& out) {
  std::istringstream in(text);
  std::string token;
  std::array<int, 10> stances{};
  int count = 0;
  while (in >> token) {
    if (count >= 10) return false;
    int s;
    if (token == "-1") {
      s = -1;
    } else if (token == "0") {
      s = 0;
    } else if (token == "+1") {
      s = 1;
    } else {
      return false;
    }
    stances[count++] = s;
  }
  if (count != 10) return false;
  out.stances = stances;
  return true;
}

ValueVector RubricValueJudge::judge_value_vector(const std::string& response_text) {
  ChatRequest req;
  req.system_prompt = rubric_;
  req.messages.push_back({"user", response_text});
  req.temperature = 0.0;
  req.max_tokens = 64;
  req.tag = "judge";

  std::string raw;
  constexpr int kAttempts = 3;  // one ask plus two re-asks
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    raw = chat_->chat_complete(req);
    ValueVector v;
    if (parse_stances(raw, v)) return v;
    req.messages.push_back({"assistant", raw});
    req.messages.push_back(
        {"user",
         "Your previous answer was not parseable. Respond with exactly 10 "
         "whitespace-separated tokens, each one of -1, 0, or +1, and nothing else."});
    req.tag = "judge/retry" + std::to_string(attempt + 1);
  }
  throw JudgeError("value judge produced unparseable output after 3 attempts", raw);
}

// --- RemoteChatProvider --------------------------------------------------------

RemoteChatProvider::RemoteChatProvider(std::shared_ptr<HttpTransport> transport,
                                       std::string model, RetryPolicy retry,
                                       std::string chat_path)
    : transport_(std::move(transport)),
      model_(std::move(model)),
      retry_(std::move(retry)),
      chat_path_(std::move(chat_path)) {
  if (!transport_) throw InvalidInputError("RemoteChatProvider: null transport");
  if (model_.empty()) throw InvalidInputError("RemoteChatProvider: empty model name");
  retry_.validate();
}

std::string RemoteChatProvider::post_chat(const std::string& body) {
  HttpResponse resp = post_with_retry(*transport_, chat_path_, body, retry_);
  return resp.body;
}

std::string RemoteChatProvider::chat_complete(const ChatRequest& req) {
  req.validate();
  nlohmann::json messages = nlohmann::json::array();
  if (!req.system_prompt.empty()) {
    messages.push_back({{"role", "system"}, {"content", req.system_prompt}});
  }
  for (const auto& m : req.messages) {
    messages.push_back({{"role", m.role}, {"content", m.content}});
  }
  nlohmann::json body = {{"model", model_},
                         {"messages", std::move(messages)},
                         {"temperature", req.temperature},
                         {"max_tokens", req.max_tokens}};

  std::string raw = post_chat(body.dump());
  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty()) {
    throw FormatError("chat response is not a choices document");
  }
  const auto& msg = doc["choices"][0];
  if (!msg.contains("message") || !msg["message"].contains("content") ||
      !msg["message"]["content"].is_string()) {
    throw FormatError("chat response choice has no message content");
  }
  return msg["message"]["content"].get<std::string>();
}

TokenLogProbs RemoteChatProvider::score_logprobs(const std::string& context,
                                                 const std::string& continuation) {
  if (continuation.empty()) {
    throw InvalidInputError("RemoteChatProvider: empty continuation");
  }
  nlohmann::json body = {{"model", model_},
                         {"messages",
                          {{{"role", "user"}, {"content", context}},
                           {{"role", "assistant"}, {"content", continuation}}}},
                         {"temperature", 0.0},
                         {"max_tokens", 0},
                         {"logprobs", true}};

  std::string raw = post_chat(body.dump());
  nlohmann::json doc = nlohmann::json::parse(raw, nullptr, false);
  if (doc.is_discarded() || !doc.contains("choices") || !doc["choices"].is_array() ||
      doc["choices"].empty()) {
    throw FormatError("logprob response is not a choices document");
  }
  const auto& choice = doc["choices"][0];
  if (!choice.contains("logprobs") || choice["logprobs"].is_null()) {
    throw CapabilityError("endpoint returned no logprobs; scoring requires logprob support");
  }
  const auto& lp = choice["logprobs"];
  if (!lp.contains("content") || !lp["content"].is_array() || lp["content"].empty()) {
    throw CapabilityError("endpoint returned empty logprobs content");
  }
  TokenLogProbs out;
  for (const auto& entry : lp["content"]) {
    if (!entry.contains("token") || !entry.contains("logprob")) {
      throw FormatError("logprob entry missing token or logprob");
    }
    out.tokens.push_back(entry["token"].get<std::string>());
    out.logprobs.push_back(entry["logprob"].get<double>());
  }
  out.validate();
  return out;
}

}  // namespace consensus
