#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "consensus/errors.hpp"

namespace consensus {

struct HttpResponse {
  int status = 0;    // 0 means the request never produced an HTTP status
  std::string body;  // payload, or transport error text when status == 0
};

// Minimal POST-a-JSON-document transport. Implementations must be safe for
// concurrent calls; they bound their own in-flight request count.
class HttpTransport {
 public:
  virtual ~HttpTransport() = default;
  virtual HttpResponse post_json(const std::string& path, const std::string& body) = 0;
};

struct RetryPolicy {
  int max_attempts = 5;      // total attempts, including the first
  int base_delay_ms = 200;   // delay before the second attempt
  double growth = 2.0;       // geometric factor between consecutive delays
  // Injectable for tests; defaults to a real sleep.
  std::function<void(int delay_ms)> sleep;

  void validate() const;
};

// Posts with bounded geometric-backoff retries. Retryable outcomes are
// transport failures (status 0), HTTP 429 and HTTP 5xx; any other non-2xx
// status fails immediately. Throws ProviderError carrying the attempt count
// and last status once the budget is spent.
HttpResponse post_with_retry(HttpTransport& transport, const std::string& path,
                             const std::string& body, const RetryPolicy& policy);

// Real transport over cpp-httplib. One client per request keeps the adapter
// trivially thread-safe; a counting semaphore bounds in-flight requests.
std::shared_ptr<HttpTransport> make_httplib_transport(const std::string& base_url,
                                                      const std::string& api_key,
                                                      int max_in_flight = 4,
                                                      int timeout_seconds = 120);

}  // namespace consensus
