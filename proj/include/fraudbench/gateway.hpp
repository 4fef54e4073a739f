#pragma once

#include <chrono>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <variant>
#include <vector>

#include "fraudbench/domain.hpp"
#include "fraudbench/errors.hpp"
#include "fraudbench/util.hpp"

namespace fraudbench {

// ---------------------------------------------------------------------------
// Endpoints and messages
// ---------------------------------------------------------------------------

struct RemoteBackend {
    std::string base_url;
    std::string model_name;
    std::string api_key_env;  // environment variable name only; the key itself is never stored
};

struct ScriptedBackend {
    std::string script_id;
};

struct SamplingParams {
    double temperature = 0.7;
    int max_tokens = 512;
};

struct RetryPolicy {
    int max_attempts = 3;
    std::vector<std::chrono::milliseconds> backoff = {
        std::chrono::milliseconds(250), std::chrono::milliseconds(1000),
        std::chrono::milliseconds(4000)};

    std::chrono::milliseconds backoff_for(int failed_attempts) const {
        if (backoff.empty()) return std::chrono::milliseconds(0);
        std::size_t i = static_cast<std::size_t>(failed_attempts - 1);
        return backoff[std::min(i, backoff.size() - 1)];
    }
};

struct AgentEndpoint {
    std::variant<RemoteBackend, ScriptedBackend> backend = ScriptedBackend{};
    SamplingParams sampling;
    std::chrono::milliseconds timeout{60000};
    RetryPolicy retry;
    double rate_limit_rps = 0;  // 0 = unlimited; shared per base_url

    bool scripted() const { return std::holds_alternative<ScriptedBackend>(backend); }
};

inline AgentEndpoint scripted_endpoint(std::string script_id) {
    AgentEndpoint ep;
    ep.backend = ScriptedBackend{std::move(script_id)};
    return ep;
}

// Identifier safe to write into run logs (never contains key material).
inline std::string endpoint_identifier(const AgentEndpoint& ep) {
    if (auto* remote = std::get_if<RemoteBackend>(&ep.backend))
        return "remote:" + remote->base_url + ":" + remote->model_name;
    return "scripted:" + std::get<ScriptedBackend>(ep.backend).script_id;
}

struct Message {
    enum class Role { kSystem, kUser, kAssistant };
    Role role = Role::kUser;
    std::string content;
};

inline Message system_message(std::string content) { return {Message::Role::kSystem, std::move(content)}; }
inline Message user_message(std::string content) { return {Message::Role::kUser, std::move(content)}; }
inline Message assistant_message(std::string content) { return {Message::Role::kAssistant, std::move(content)}; }

inline const char* role_name(Message::Role r) {
    switch (r) {
        case Message::Role::kSystem: return "system";
        case Message::Role::kUser: return "user";
        case Message::Role::kAssistant: return "assistant";
    }
    return "user";
}

// The flattened view a scripted matcher sees and the transcript records.
inline std::string flatten_messages(const std::vector<Message>& messages) {
    std::string out;
    for (std::size_t i = 0; i < messages.size(); ++i) {
        if (i) out += "\n\n";
        out += messages[i].content;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Scripted backends. A program is an ordered list of (matcher, reply) steps;
// each trial replays the program from the top through its own ScriptRuntime,
// which keeps concurrent trials deterministic and lets tests assert on every
// prompt a role received.
// ---------------------------------------------------------------------------

struct ScriptStep {
    std::string matcher;     // substring, or ECMAScript regex when is_regex
    bool is_regex = false;
    std::string reply;
};

struct ScriptProgram {
    std::string script_id;
    std::vector<ScriptStep> steps;
    bool loop = false;  // replay from the top instead of exhausting
};

class ScriptStore {
public:
    void register_program(ScriptProgram program) {
        if (program.steps.empty())
            throw ConfigError("script \"" + program.script_id + "\": steps must be non-empty");
        std::lock_guard<std::mutex> lock(mutex_);
        programs_[program.script_id] = std::move(program);
    }

    ScriptProgram program(const std::string& script_id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = programs_.find(script_id);
        if (it == programs_.end())
            throw ConfigError("no scripted program registered under id \"" + script_id + "\"");
        return it->second;
    }

private:
    mutable std::mutex mutex_;
    std::map<std::string, ScriptProgram> programs_;
};

// Registration entry point matching the documented operation shape.
inline void scripted_program(ScriptStore& store, std::string script_id,
                             std::vector<ScriptStep> steps, bool loop = false) {
    store.register_program(ScriptProgram{std::move(script_id), std::move(steps), loop});
}

inline bool matcher_fires(const ScriptStep& step, const std::string& prompt) {
    if (step.is_regex) return std::regex_search(prompt, std::regex(step.matcher));
    return prompt.find(step.matcher) != std::string::npos;
}

// Per-trial replay state for every script the trial touches.
class ScriptRuntime {
public:
    explicit ScriptRuntime(const ScriptStore* store) : store_(store) {}

    std::string run(const std::string& script_id, const std::string& prompt) {
        State& state = state_for(script_id);
        state.received.push_back(prompt);
        if (state.cursor >= state.program.steps.size()) {
            if (!state.program.loop)
                throw ScriptExhaustedError("script \"" + script_id + "\" exhausted after " +
                                           std::to_string(state.program.steps.size()) + " steps");
            state.cursor = 0;
        }
        const ScriptStep& step = state.program.steps[state.cursor];
        if (!matcher_fires(step, prompt))
            throw ScriptDivergenceError("script \"" + script_id + "\" step " +
                                        std::to_string(state.cursor + 1) + ": matcher \"" +
                                        step.matcher + "\" did not fire");
        ++state.cursor;
        return step.reply;
    }

    const std::vector<std::string>& received(const std::string& script_id) {
        return state_for(script_id).received;
    }

private:
    struct State {
        ScriptProgram program;
        std::size_t cursor = 0;
        std::vector<std::string> received;
    };

    State& state_for(const std::string& script_id) {
        auto it = states_.find(script_id);
        if (it == states_.end()) {
            State s;
            s.program = store_->program(script_id);
            it = states_.emplace(script_id, std::move(s)).first;
        }
        return it->second;
    }

    const ScriptStore* store_;
    std::map<std::string, State> states_;
};

// ---------------------------------------------------------------------------
// Rate limiting: sliding one-second window per base_url.
// ---------------------------------------------------------------------------

class RateLimiter {
public:
    explicit RateLimiter(Clock* clock) : clock_(clock) {}

    // Blocks (in backoff steps) until the window admits another request;
    // throws RateLimitedError once `timeout` has been consumed waiting.
    void acquire(const std::string& key, double rps, std::chrono::milliseconds timeout) {
        if (rps <= 0) return;
        const auto max_in_window = std::max<std::size_t>(1, static_cast<std::size_t>(rps));
        std::chrono::milliseconds waited{0};
        for (;;) {
            {
                std::lock_guard<std::mutex> lock(mutex_);
                auto& window = admitted_[key];
                const auto now = clock_->now();
                while (!window.empty() && now - window.front() >= std::chrono::seconds(1))
                    window.pop_front();
                if (window.size() < max_in_window) {
                    window.push_back(now);
                    return;
                }
            }
            if (waited >= timeout)
                throw RateLimitedError("rate limiter for " + key + " could not admit within " +
                                       std::to_string(timeout.count()) + " ms");
            const auto step = std::chrono::milliseconds(10);
            clock_->sleep_for(step);
            waited += step;
        }
    }

private:
    std::mutex mutex_;
    std::map<std::string, std::deque<std::chrono::steady_clock::time_point>> admitted_;
    Clock* clock_;
};

// ---------------------------------------------------------------------------
// HTTP transport seam. The production poster (cpp-httplib) lives in
// http_client.hpp so offline builds and tests can inject fakes.
// ---------------------------------------------------------------------------

struct HttpRequest {
    std::string base_url;
    std::string path;
    std::string bearer_token;
    std::string body;  // JSON
    std::chrono::milliseconds timeout{60000};
};

struct HttpResponse {
    int status = 0;           // 0 = transport-level failure
    std::string body;
    std::string error;        // transport failure description
};

using HttpPoster = std::function<HttpResponse(const HttpRequest&)>;

// ---------------------------------------------------------------------------
// Trial context: per-trial script state plus the transcript sink.
// ---------------------------------------------------------------------------

struct TrialContext {
    explicit TrialContext(const ScriptStore* store) : scripts(store) {}

    ScriptRuntime scripts;
    std::vector<TranscriptEvent>* transcript = nullptr;
    std::string stage;  // label recorded with every event ("summary", "round_2", ...)
    std::string assistant_role = "assistant";  // who is speaking ("scammer_2", "judge", ...)
    int parse_failures = 0;

    void record(std::string role, std::string text, double latency_ms = 0.0) {
        if (transcript) transcript->push_back({std::move(role), stage, std::move(text), latency_ms});
    }
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

class AgentGateway {
public:
    explicit AgentGateway(std::shared_ptr<ScriptStore> scripts, Clock* clock = &system_clock(),
                          HttpPoster poster = nullptr)
        : scripts_(std::move(scripts)), clock_(clock), limiter_(clock), poster_(std::move(poster)) {}

    const ScriptStore& script_store() const { return *scripts_; }
    ScriptStore& script_store() { return *scripts_; }
    TrialContext make_context() const { return TrialContext(scripts_.get()); }

    // Returns the assistant text for one chat completion. Scripted endpoints
    // are pure replay; remote endpoints go through the shared rate limiter and
    // the retry policy. Request, response and latency all land in the trial
    // transcript via ctx.
    std::string complete(const AgentEndpoint& endpoint, const std::vector<Message>& messages,
                         TrialContext& ctx) {
        if (messages.empty()) throw EmptyCompletionError("complete() called with no messages");
        for (const auto& m : messages)
            if (m.content.empty())
                throw EmptyCompletionError("complete() called with an empty message body");
        const std::string prompt = flatten_messages(messages);
        ctx.record("prompt", prompt);

        std::string reply;
        if (auto* scripted = std::get_if<ScriptedBackend>(&endpoint.backend)) {
            reply = ctx.scripts.run(scripted->script_id, prompt);
            ctx.record(ctx.assistant_role, reply, 0.0);
        } else {
            reply = complete_remote(std::get<RemoteBackend>(endpoint.backend), endpoint, messages, ctx);
        }
        if (trim(reply).empty())
            throw EmptyCompletionError("endpoint " + endpoint_identifier(endpoint) +
                                       " returned an empty completion");
        return reply;
    }

private:
    std::string complete_remote(const RemoteBackend& remote, const AgentEndpoint& endpoint,
                                const std::vector<Message>& messages, TrialContext& ctx);

    std::shared_ptr<ScriptStore> scripts_;
    Clock* clock_;
    RateLimiter limiter_;
    HttpPoster poster_;
};

}  // namespace fraudbench

#include "fraudbench/gateway_remote.hpp"
