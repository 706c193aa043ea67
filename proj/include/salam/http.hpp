#pragma once

#include <chrono>
#include <functional>
#include <string>

namespace salam::http {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // starts with '/'
};

// Splits "http://host:8080/v1/chat" into origin and path. Throws
// invalid_argument on anything without a scheme and host.
Endpoint parse_url(const std::string& url);

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{500};
    double multiplier = 2.0;
};

struct PostRequest {
    Endpoint endpoint;
    std::string body;
    std::string bearer_token;
    std::chrono::milliseconds timeout{60'000};
};

// POSTs JSON and returns the body of a 2xx response. Retries transport
// failures, 429 and 5xx with exponential backoff up to policy.max_attempts;
// other 4xx fail immediately. Throws rate_limited when the last attempt got
// 429, provider_unavailable otherwise.
std::string post_json(const PostRequest& request, const RetryPolicy& policy);

}  // namespace salam::http
