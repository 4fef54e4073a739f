#pragma once

// Production HTTP transport for remote endpoints, kept out of gateway.hpp so
// only binaries that actually talk to the network pull in cpp-httplib and
// OpenSSL.

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "fraudbench/gateway.hpp"

namespace fraudbench {

inline HttpPoster default_http_poster() {
    return [](const HttpRequest& req) -> HttpResponse {
        httplib::Client client(req.base_url);
        const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(req.timeout);
        client.set_connection_timeout(std::max<long>(1, seconds.count()), 0);
        client.set_read_timeout(std::max<long>(1, seconds.count()), 0);
        client.set_write_timeout(std::max<long>(1, seconds.count()), 0);

        httplib::Headers headers;
        if (!req.bearer_token.empty())
            headers.emplace("Authorization", "Bearer " + req.bearer_token);

        auto result = client.Post(req.path, headers, req.body, "application/json");
        HttpResponse out;
        if (!result) {
            out.status = 0;
            out.error = httplib::to_string(result.error());
            return out;
        }
        out.status = result->status;
        out.body = result->body;
        return out;
    };
}

}  // namespace fraudbench
