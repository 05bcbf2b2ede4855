#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "consensus/errors.hpp"
#include "consensus/http.hpp"
#include "consensus/providers.hpp"

using namespace consensus;

namespace {

// Transport stub driven by a fixed status/body schedule; repeats the last
// entry when the schedule runs out. Records every request body.
class StubTransport final : public HttpTransport {
 public:
  explicit StubTransport(std::vector<HttpResponse> schedule) : schedule_(std::move(schedule)) {}

  HttpResponse post_json(const std::string& path, const std::string& body) override {
    paths.push_back(path);
    bodies.push_back(body);
    std::size_t idx = std::min(calls_, schedule_.size() - 1);
    ++calls_;
    return schedule_[idx];
  }

  std::vector<std::string> paths;
  std::vector<std::string> bodies;

 private:
  std::vector<HttpResponse> schedule_;
  std::size_t calls_ = 0;
};

RetryPolicy recording_policy(std::vector<int>* delays) {
  RetryPolicy p;
  p.sleep = [delays](int ms) { delays->push_back(ms); };
  return p;
}

std::string chat_body(const std::string& content) {
  nlohmann::json doc = {{"choices", {{{"message", {{"content", content}}}}}}};
  return doc.dump();
}

ChatRequest simple_request(const std::string& text, const std::string& tag = "") {
  ChatRequest req;
  req.system_prompt = "system";
  req.messages.push_back({"user", text});
  req.tag = tag;
  return req;
}

}  // namespace

TEST_CASE("chat request validation") {
  ChatRequest req = simple_request("hello");
  CHECK_NOTHROW(req.validate());

  req.messages[0].role = "wizard";
  CHECK_THROWS_AS(req.validate(), InvalidInputError);
  req.messages[0].role = "assistant";
  CHECK_NOTHROW(req.validate());

  req.messages.clear();
  CHECK_THROWS_AS(req.validate(), InvalidInputError);

  req = simple_request("x");
  req.temperature = -0.5;
  CHECK_THROWS_AS(req.validate(), InvalidInputError);
  req.temperature = 0.7;
  req.max_tokens = -1;
  CHECK_THROWS_AS(req.validate(), InvalidInputError);
}

TEST_CASE("scripted chat provider queue semantics") {
  ScriptedChatProvider chat;
  chat.push("first");
  chat.push("second");
  chat.push_for("east/round1/analyze", "analysis text");

  // Tagged request pops from its own queue.
  CHECK(chat.chat_complete(simple_request("x", "east/round1/analyze")) == "analysis text");
  // Unregistered tag falls back to the default queue, FIFO.
  CHECK(chat.chat_complete(simple_request("y", "unknown/tag")) == "first");
  CHECK(chat.chat_complete(simple_request("z")) == "second");

  // Exhausted tagged queue names the tag in the error.
  try {
    chat.chat_complete(simple_request("x", "east/round1/analyze"));
    FAIL("expected ScriptError");
  } catch (const ScriptError& e) {
    CHECK(std::string(e.what()).find("east/round1/analyze") != std::string::npos);
  }
  // Exhausted default queue also throws.
  CHECK_THROWS_AS(chat.chat_complete(simple_request("x")), ScriptError);

  // Every request, including the failing ones, is recorded.
  CHECK(chat.requests().size() == 5);
  CHECK(chat.requests()[0].tag == "east/round1/analyze");
  CHECK(chat.requests()[2].messages[0].content == "z");
}

TEST_CASE("synthetic chat provider is seed-deterministic") {
  SyntheticChatProvider a(7), b(7), c(8);
  auto req = simple_request("Please analyze the opponent position.", "east/round1/analyze");
  auto r1 = a.chat_complete(req);
  CHECK(r1 == b.chat_complete(req));
  CHECK(r1 != c.chat_complete(req));
  CHECK(!r1.empty());

  // Generation tags yield candidate blocks in the wire format.
  auto gen = simple_request("Propose exactly 2 new guidelines.", "east/round2/generate/innovative");
  auto text = a.chat_complete(gen);
  CHECK(text.find("<<<CANDIDATE") != std::string::npos);
  CHECK(text.find("CONTENT:") != std::string::npos);
  CHECK(text.find("REASON:") != std::string::npos);
  CHECK(text.find("DESCRIPTION:") != std::string::npos);
}

TEST_CASE("bigram scorer matches hand-computed smoothed counts") {
  BigramLogProbProvider lm("aab");
  // Corpus "aab": pairs (a,a) and (a,b); 'a' occurs twice as a pair prefix.
  CHECK(lm.log_prob('a', 'a') == doctest::Approx(std::log(2.0 / 258.0)).epsilon(1e-12));
  CHECK(lm.log_prob('a', 'b') == doctest::Approx(std::log(2.0 / 258.0)).epsilon(1e-12));
  // Unseen pair under add-one smoothing.
  CHECK(lm.log_prob('a', 'z') == doctest::Approx(std::log(1.0 / 258.0)).epsilon(1e-12));
  CHECK(lm.log_prob('b', 'a') == doctest::Approx(std::log(1.0 / 256.0)).epsilon(1e-12));
  // Initial distribution uses unigram counts over the whole corpus.
  CHECK(lm.log_prob_initial('a') == doctest::Approx(std::log(3.0 / 259.0)).epsilon(1e-12));
  CHECK(lm.log_prob_initial('b') == doctest::Approx(std::log(2.0 / 259.0)).epsilon(1e-12));
  CHECK(lm.log_prob_initial('z') == doctest::Approx(std::log(1.0 / 259.0)).epsilon(1e-12));

  // score_logprobs chains: first char conditions on the context's last char.
  auto scored = lm.score_logprobs("xa", "ab");
  REQUIRE(scored.tokens.size() == 2);
  CHECK(scored.tokens[0] == "a");
  CHECK(scored.tokens[1] == "b");
  CHECK(scored.logprobs[0] == doctest::Approx(lm.log_prob('a', 'a')).epsilon(1e-12));
  CHECK(scored.logprobs[1] == doctest::Approx(lm.log_prob('a', 'b')).epsilon(1e-12));

  // Empty context starts from the unigram distribution.
  auto cold = lm.score_logprobs("", "ba");
  CHECK(cold.logprobs[0] == doctest::Approx(lm.log_prob_initial('b')).epsilon(1e-12));
  CHECK(cold.logprobs[1] == doctest::Approx(lm.log_prob('b', 'a')).epsilon(1e-12));

  CHECK_THROWS_AS(lm.score_logprobs("context", ""), InvalidInputError);
  CHECK_THROWS_AS(BigramLogProbProvider(""), InvalidInputError);
}

TEST_CASE("default-corpus bigram scorer is deterministic and finite") {
  BigramLogProbProvider a, b;
  auto s1 = a.score_logprobs("Should children obey?", "Yes, within reason.");
  auto s2 = b.score_logprobs("Should children obey?", "Yes, within reason.");
  CHECK(s1.tokens == s2.tokens);
  CHECK(s1.logprobs == s2.logprobs);
  for (double lp : s1.logprobs) {
    CHECK(std::isfinite(lp));
    CHECK(lp < 0.0);  // smoothed probabilities are strictly below 1
  }
}

TEST_CASE("retry policy: 429 storm exhausts the budget with geometric backoff") {
  StubTransport transport({{429, "slow down"}});
  std::vector<int> delays;
  auto policy = recording_policy(&delays);

  try {
    post_with_retry(transport, "/v1/chat/completions", "{}", policy);
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.attempts == 5);
    CHECK(e.http_status == 429);
  }
  CHECK(delays == std::vector<int>{200, 400, 800, 1600});
  CHECK(transport.bodies.size() == 5);
}

TEST_CASE("retry policy: transient faults recover") {
  SUBCASE("5xx then success") {
    StubTransport transport({{500, "oops"}, {200, "ok-body"}});
    std::vector<int> delays;
    auto resp = post_with_retry(transport, "/x", "{}", recording_policy(&delays));
    CHECK(resp.status == 200);
    CHECK(resp.body == "ok-body");
    CHECK(delays == std::vector<int>{200});
  }
  SUBCASE("transport-level failure then success") {
    StubTransport transport({{0, "connection reset"}, {200, "ok"}});
    std::vector<int> delays;
    auto resp = post_with_retry(transport, "/x", "{}", recording_policy(&delays));
    CHECK(resp.status == 200);
    CHECK(delays.size() == 1);
  }
}

TEST_CASE("retry policy: client errors fail immediately") {
  StubTransport transport({{400, "bad request"}});
  std::vector<int> delays;
  try {
    post_with_retry(transport, "/x", "{}", recording_policy(&delays));
    FAIL("expected ProviderError");
  } catch (const ProviderError& e) {
    CHECK(e.attempts == 1);
    CHECK(e.http_status == 400);
  }
  CHECK(delays.empty());
  CHECK(transport.bodies.size() == 1);
}

TEST_CASE("retry policy validation") {
  RetryPolicy p;
  CHECK_NOTHROW(p.validate());
  p.max_attempts = 0;
  CHECK_THROWS_AS(p.validate(), InvalidInputError);
  p = RetryPolicy{};
  p.growth = 0.5;
  CHECK_THROWS_AS(p.validate(), InvalidInputError);
}

TEST_CASE("scripted value judge") {
  ScriptedValueJudge judge;
  ValueVector v;
  v.stances = {1, 0, 0, 0, 0, 0, 0, 0, 0, -1};
  judge.set("the response", v);
  CHECK(judge.judge_value_vector("the response").stances == v.stances);
  CHECK_THROWS_AS(judge.judge_value_vector("unknown"), ScriptError);
}

TEST_CASE("synthetic value judge is deterministic and in range") {
  SyntheticValueJudge a(3), b(3), c(4);
  auto v1 = a.judge_value_vector("some cultural response");
  auto v2 = b.judge_value_vector("some cultural response");
  CHECK(v1.stances == v2.stances);
  CHECK_NOTHROW(v1.validate());
  for (int s : v1.stances) CHECK((s == -1 || s == 0 || s == 1));
  // Seed changes the mapping for at least some inputs.
  bool any_diff = false;
  for (int i = 0; i < 8 && !any_diff; ++i) {
    std::string text = "probe " + std::to_string(i);
    any_diff = a.judge_value_vector(text).stances != c.judge_value_vector(text).stances;
  }
  CHECK(any_diff);
}

TEST_CASE("stance parser accepts exactly ten signed ternary tokens") {
  ValueVector v;
  CHECK(RubricValueJudge::parse_stances("+1 0 -1 0 0 +1 -1 0 0 +1", v));
  CHECK(v.stances == std::array<int, 10>{1, 0, -1, 0, 0, 1, -1, 0, 0, 1});
  // Arbitrary whitespace is fine.
  CHECK(RubricValueJudge::parse_stances("  +1\n0\t-1 0 0 +1 -1 0 0 +1\n", v));

  CHECK_FALSE(RubricValueJudge::parse_stances("", v));
  CHECK_FALSE(RubricValueJudge::parse_stances("+1 0 -1 0 0 +1 -1 0 0", v));          // 9 tokens
  CHECK_FALSE(RubricValueJudge::parse_stances("+1 0 -1 0 0 +1 -1 0 0 +1 0", v));     // 11 tokens
  CHECK_FALSE(RubricValueJudge::parse_stances("1 0 -1 0 0 +1 -1 0 0 +1", v));        // bare 1
  CHECK_FALSE(RubricValueJudge::parse_stances("+1 0 -1 0 0 +2 -1 0 0 +1", v));       // out of range
  CHECK_FALSE(RubricValueJudge::parse_stances("yes no yes no yes no yes no yes no", v));
}

TEST_CASE("rubric judge retries with a corrective turn, then succeeds") {
  auto chat = std::make_shared<ScriptedChatProvider>();
  chat->push("I think the values are mostly positive!");  // unparseable
  chat->push("+1 0 0 0 0 0 0 0 -1 0");

  RubricValueJudge judge(chat, "rate the ten values");
  auto v = judge.judge_value_vector("respondent text");
  CHECK(v.stances[0] == 1);
  CHECK(v.stances[8] == -1);

  REQUIRE(chat->requests().size() == 2);
  CHECK(chat->requests()[0].tag == "judge");
  CHECK(chat->requests()[0].messages.size() == 1);
  // The retry carries the failed answer and a corrective user instruction.
  CHECK(chat->requests()[1].tag == "judge/retry1");
  REQUIRE(chat->requests()[1].messages.size() == 3);
  CHECK(chat->requests()[1].messages[1].role == "assistant");
  CHECK(chat->requests()[1].messages[1].content == "I think the values are mostly positive!");
  CHECK(chat->requests()[1].messages[2].role == "user");
}

TEST_CASE("rubric judge gives up after three attempts with the raw output") {
  auto chat = std::make_shared<ScriptedChatProvider>();
  chat->push("nonsense one");
  chat->push("nonsense two");
  chat->push("nonsense three");

  RubricValueJudge judge(chat, "rubric");
  try {
    judge.judge_value_vector("text");
    FAIL("expected JudgeError");
  } catch (const JudgeError& e) {
    CHECK(e.raw_output == "nonsense three");
  }
  CHECK(chat->requests().size() == 3);
  CHECK(chat->requests()[2].tag == "judge/retry2");

  CHECK_THROWS_AS(RubricValueJudge(nullptr, "rubric"), InvalidInputError);
  CHECK_THROWS_AS(RubricValueJudge(chat, ""), InvalidInputError);
}

TEST_CASE("remote chat provider speaks the chat-completions wire format") {
  auto transport = std::make_shared<StubTransport>(
      std::vector<HttpResponse>{{200, chat_body("the reply")}});
  RemoteChatProvider provider(transport, "test-model");

  ChatRequest req = simple_request("user text");
  req.temperature = 0.3;
  req.max_tokens = 77;
  CHECK(provider.chat_complete(req) == "the reply");

  REQUIRE(transport->bodies.size() == 1);
  CHECK(transport->paths[0] == "/v1/chat/completions");
  auto body = nlohmann::json::parse(transport->bodies[0]);
  CHECK(body["model"] == "test-model");
  CHECK(body["temperature"] == 0.3);
  CHECK(body["max_tokens"] == 77);
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "system");
  CHECK(body["messages"][0]["content"] == "system");
  CHECK(body["messages"][1]["role"] == "user");
  CHECK(body["messages"][1]["content"] == "user text");
}

TEST_CASE("remote chat provider rejects malformed response documents") {
  SUBCASE("not json") {
    auto transport = std::make_shared<StubTransport>(std::vector<HttpResponse>{{200, "<html>"}});
    RemoteChatProvider provider(transport, "m");
    CHECK_THROWS_AS(provider.chat_complete(simple_request("x")), FormatError);
  }
  SUBCASE("empty choices") {
    auto transport = std::make_shared<StubTransport>(
        std::vector<HttpResponse>{{200, R"({"choices":[]})"}});
    RemoteChatProvider provider(transport, "m");
    CHECK_THROWS_AS(provider.chat_complete(simple_request("x")), FormatError);
  }
  SUBCASE("choice without content") {
    auto transport = std::make_shared<StubTransport>(
        std::vector<HttpResponse>{{200, R"({"choices":[{"message":{}}]})"}});
    RemoteChatProvider provider(transport, "m");
    CHECK_THROWS_AS(provider.chat_complete(simple_request("x")), FormatError);
  }
}

TEST_CASE("remote logprob scoring prefills the continuation and parses tokens") {
  nlohmann::json lp_doc = {
      {"choices",
       {{{"message", {{"content", ""}}},
         {"logprobs",
          {{"content",
            {{{"token", "Yes"}, {"logprob", -0.5}}, {{"token", "."}, {"logprob", -1.25}}}}}}}}}};
  auto transport =
      std::make_shared<StubTransport>(std::vector<HttpResponse>{{200, lp_doc.dump()}});
  RemoteChatProvider provider(transport, "m");

  auto scored = provider.score_logprobs("the context", "Yes.");
  REQUIRE(scored.tokens.size() == 2);
  CHECK(scored.tokens[0] == "Yes");
  CHECK(scored.logprobs[1] == doctest::Approx(-1.25));

  auto body = nlohmann::json::parse(transport->bodies[0]);
  CHECK(body["logprobs"] == true);
  CHECK(body["max_tokens"] == 0);
  CHECK(body["temperature"] == 0.0);
  REQUIRE(body["messages"].size() == 2);
  CHECK(body["messages"][0]["role"] == "user");
  CHECK(body["messages"][0]["content"] == "the context");
  CHECK(body["messages"][1]["role"] == "assistant");
  CHECK(body["messages"][1]["content"] == "Yes.");

  CHECK_THROWS_AS(provider.score_logprobs("ctx", ""), InvalidInputError);
}

TEST_CASE("logprob scoring distinguishes missing support from bad format") {
  SUBCASE("no logprobs field -> capability error") {
    auto transport = std::make_shared<StubTransport>(
        std::vector<HttpResponse>{{200, chat_body("reply")}});
    RemoteChatProvider provider(transport, "m");
    CHECK_THROWS_AS(provider.score_logprobs("ctx", "cont"), CapabilityError);
  }
  SUBCASE("empty logprobs content -> capability error") {
    auto transport = std::make_shared<StubTransport>(std::vector<HttpResponse>{
        {200, R"({"choices":[{"message":{"content":""},"logprobs":{"content":[]}}]})"}});
    RemoteChatProvider provider(transport, "m");
    CHECK_THROWS_AS(provider.score_logprobs("ctx", "cont"), CapabilityError);
  }
  SUBCASE("entry missing logprob -> format error") {
    auto transport = std::make_shared<StubTransport>(std::vector<HttpResponse>{
        {200,
         R"({"choices":[{"message":{"content":""},"logprobs":{"content":[{"token":"x"}]}}]})"}});
    RemoteChatProvider provider(transport, "m");
    CHECK_THROWS_AS(provider.score_logprobs("ctx", "cont"), FormatError);
  }
}

TEST_CASE("remote provider surfaces retry exhaustion as provider error") {
  auto transport = std::make_shared<StubTransport>(std::vector<HttpResponse>{{429, "limit"}});
  std::vector<int> delays;
  RemoteChatProvider provider(transport, "m", recording_policy(&delays));
  CHECK_THROWS_AS(provider.chat_complete(simple_request("x")), ProviderError);
  CHECK(delays.size() == 4);  // five attempts, four waits
}
