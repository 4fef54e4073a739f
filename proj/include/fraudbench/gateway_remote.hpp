#pragma once

// Remote-endpoint plumbing for AgentGateway::complete. Split from gateway.hpp
// only to keep the class definition readable; include gateway.hpp, not this.

#include <cstdlib>

#include <json.hpp>

#include "fraudbench/gateway.hpp"

namespace fraudbench {

namespace detail {

inline std::string chat_request_body(const RemoteBackend& remote, const SamplingParams& sampling,
                                     const std::vector<Message>& messages) {
    nlohmann::ordered_json body;
    body["model"] = remote.model_name;
    body["messages"] = nlohmann::ordered_json::array();
    for (const auto& m : messages)
        body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
    body["temperature"] = sampling.temperature;
    body["max_tokens"] = sampling.max_tokens;
    return body.dump();
}

inline std::string extract_completion_content(const std::string& body) {
    nlohmann::json parsed = nlohmann::json::parse(body, nullptr, false);
    if (parsed.is_discarded())
        throw TransportError("chat completion response is not valid JSON");
    if (!parsed.contains("choices") || !parsed["choices"].is_array() || parsed["choices"].empty())
        throw TransportError("chat completion response has no choices");
    const auto& first = parsed["choices"][0];
    if (!first.contains("message") || !first["message"].contains("content"))
        throw TransportError("chat completion response has no message content");
    const auto& content = first["message"]["content"];
    return content.is_string() ? content.get<std::string>() : std::string();
}

}  // namespace detail

inline std::string AgentGateway::complete_remote(const RemoteBackend& remote,
                                                 const AgentEndpoint& endpoint,
                                                 const std::vector<Message>& messages,
                                                 TrialContext& ctx) {
    std::string bearer;
    if (!remote.api_key_env.empty()) {
        const char* key = std::getenv(remote.api_key_env.c_str());
        if (!key || !*key)
            throw AuthError("environment variable " + remote.api_key_env + " is not set");
        bearer = key;
    }
    if (!poster_)
        throw TransportError("no HTTP transport configured; use default_http_poster() or inject one");

    HttpRequest req;
    req.base_url = remote.base_url;
    req.path = "/v1/chat/completions";
    req.bearer_token = bearer;
    req.body = detail::chat_request_body(remote, endpoint.sampling, messages);
    req.timeout = endpoint.timeout;

    const int max_attempts = std::max(1, endpoint.retry.max_attempts);
    for (int attempt = 1; attempt <= max_attempts; ++attempt) {
        limiter_.acquire(remote.base_url, endpoint.rate_limit_rps, endpoint.timeout);
        const auto t0 = clock_->now();
        HttpResponse resp = poster_(req);
        const double latency_ms =
            std::chrono::duration<double, std::milli>(clock_->now() - t0).count();

        if (resp.status == 200) {
            std::string content = detail::extract_completion_content(resp.body);
            ctx.record("gateway", "attempt " + std::to_string(attempt) + "/" +
                                      std::to_string(max_attempts) + " ok",
                       latency_ms);
            ctx.record(ctx.assistant_role, content, latency_ms);
            return content;
        }
        if (resp.status == 401 || resp.status == 403)
            throw AuthError("endpoint " + remote.base_url + " rejected credentials (HTTP " +
                            std::to_string(resp.status) + ")");

        const bool transient = resp.status == 0 || resp.status == 429 || resp.status >= 500;
        std::string what = resp.status == 0 ? ("transport failure: " + resp.error)
                                            : ("HTTP " + std::to_string(resp.status));
        ctx.record("gateway", "attempt " + std::to_string(attempt) + "/" +
                                  std::to_string(max_attempts) + " failed: " + what,
                   latency_ms);
        if (!transient)
            throw TransportError("endpoint " + remote.base_url + " returned " + what);
        if (attempt == max_attempts)
            throw TransportError("endpoint " + remote.base_url + " failed after " +
                                 std::to_string(max_attempts) + " attempts: " + what);
        clock_->sleep_for(endpoint.retry.backoff_for(attempt));
    }
    throw TransportError("unreachable retry state");
}

}  // namespace fraudbench
