#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "consensus/http.hpp"

#include <chrono>
#include <semaphore>
#include <thread>

namespace consensus {

void RetryPolicy::validate() const {
  if (max_attempts < 1) throw InvalidInputError("retry policy: max_attempts must be >= 1");
  if (base_delay_ms < 0) throw InvalidInputError("retry policy: base_delay_ms must be >= 0");
  if (growth < 1.0) throw InvalidInputError("retry policy: growth must be >= 1");
}

namespace {

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

}  // namespace

HttpResponse post_with_retry(HttpTransport& transport, const std::string& path,
                             const std::string& body, const RetryPolicy& policy) {
  policy.validate();
  auto sleep_fn = policy.sleep ? policy.sleep : [](int ms) {
    std::this_thread::sleep_for(std::chrono::milliseconds(ms));
  };
  double delay = policy.base_delay_ms;
  HttpResponse last;
  for (int attempt = 1; attempt <= policy.max_attempts; ++attempt) {
    if (attempt > 1) {
      sleep_fn(static_cast<int>(delay));
      delay *= policy.growth;
    }
    last = transport.post_json(path, body);
    if (last.status >= 200 && last.status < 300) return last;
    if (!retryable(last.status)) {
      throw ProviderError("request to " + path + " failed with status " +
                              std::to_string(last.status) + ": " + last.body,
                          attempt, last.status);
    }
  }
  throw ProviderError("request to " + path + " still failing after " +
                          std::to_string(policy.max_attempts) + " attempts (last status " +
                          std::to_string(last.status) + ")",
                      policy.max_attempts, last.status);
}

namespace {

class HttplibTransport final : public HttpTransport {
 public:
  HttplibTransport(std::string base_url, std::string api_key, int max_in_flight,
                   int timeout_seconds)
      : base_url_(std::move(base_url)),
        api_key_(std::move(api_key)),
        timeout_seconds_(timeout_seconds),
        slots_(max_in_flight) {}

  HttpResponse post_json(const std::string& path, const std::string& body) override {
    slots_.acquire();
    HttpResponse out = do_post(path, body);
    slots_.release();
    return out;
  }

 private:
  HttpResponse do_post(const std::string& path, const std::string& body) {
    // One client per request: connection reuse matters less than lock-free
    // thread safety here.
    httplib::Client client(base_url_);
    client.set_connection_timeout(timeout_seconds_, 0);
    client.set_read_timeout(timeout_seconds_, 0);
    client.set_write_timeout(timeout_seconds_, 0);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
    auto result = client.Post(path, headers, body, "application/json");
    if (!result) return {0, httplib::to_string(result.error())};
    return {result->status, result->body};
  }

  std::string base_url_;
  std::string api_key_;
  int timeout_seconds_;
  std::counting_semaphore<64> slots_;
};

}  // namespace

std::shared_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      const std::string& api_key,
                                                      int max_in_flight, int timeout_seconds) {
  if (base_url.empty()) throw InvalidInputError("transport requires a base URL");
  if (max_in_flight < 1 || max_in_flight > 64) {
    throw InvalidInputError("max_in_flight must be in [1, 64]");
  }
  return std::make_shared<HttplibTransport>(base_url, api_key, max_in_flight, timeout_seconds);
}

}  // namespace consensus
