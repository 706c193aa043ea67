#include "salam/http.hpp"

#include <httplib.h>

#include <thread>

#include "salam/core.hpp"
#include "salam/error.hpp"

namespace salam::http {

Endpoint parse_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos || scheme_end == 0) {
        throw Error(ErrorKind::invalid_argument, "url needs a scheme: " + url);
    }
    auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = url.substr(0, path_start);
    ep.path = path_start == std::string::npos ? "/" : url.substr(path_start);
    if (ep.origin.size() <= scheme_end + 3) {
        throw Error(ErrorKind::invalid_argument, "url has no host: " + url);
    }
    return ep;
}

namespace {

bool retryable(int status) {
    return status == 429 || status >= 500;
}

}  // namespace

std::string post_json(const PostRequest& request, const RetryPolicy& policy) {
    const int attempts = std::max(1, policy.max_attempts);
    auto backoff = policy.initial_backoff;
    int last_status = 0;
    std::string last_error;

    for (int attempt = 1; attempt <= attempts; ++attempt) {
        httplib::Client client(request.endpoint.origin);
        auto secs = std::chrono::duration_cast<std::chrono::seconds>(request.timeout);
        auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(request.timeout - secs);
        client.set_connection_timeout(secs.count(), usecs.count());
        client.set_read_timeout(secs.count(), usecs.count());
        client.set_write_timeout(secs.count(), usecs.count());

        httplib::Headers headers;
        if (!request.bearer_token.empty()) {
            headers.emplace("Authorization", "Bearer " + request.bearer_token);
        }

        auto res = client.Post(request.endpoint.path, headers, request.body, "application/json");
        if (res && res->status >= 200 && res->status < 300) {
            return res->body;
        }
        if (res) {
            last_status = res->status;
            last_error = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 200);
            if (!retryable(res->status)) break;
        } else {
            last_status = 0;
            last_error = "transport error: " + httplib::to_string(res.error());
        }
        if (attempt < attempts) {
            core::log(core::LogLevel::info, "retrying " + request.endpoint.path + " after " + last_error);
            std::this_thread::sleep_for(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<long long>(static_cast<double>(backoff.count()) * policy.multiplier));
        }
    }

    const auto where = request.endpoint.origin + request.endpoint.path;
    if (last_status == 429) {
        throw Error(ErrorKind::rate_limited, "rate limited by " + where);
    }
    throw Error(ErrorKind::provider_unavailable, where + ": " + last_error);
}

}  // namespace salam::http
