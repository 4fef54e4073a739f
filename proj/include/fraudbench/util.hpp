#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <initializer_list>
#include <mutex>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace fraudbench {

// ---------------------------------------------------------------------------
// Stable hashing. Used for template checksums, config fingerprints and seed
// derivation, so it must not depend on std::hash (implementation-defined).
// ---------------------------------------------------------------------------

inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 0xcbf29ce484222325ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

// Seeds for sub-steps derive from (base, labels...) so adding experiment cells
// never perturbs the randomness of existing ones.
inline std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::string_view> parts) {
    std::uint64_t h = fnv1a64(hex64(base));
    for (auto p : parts) {
        h = fnv1a64("\x1f", h);
        h = fnv1a64(p, h);
    }
    return h;
}

// ---------------------------------------------------------------------------
// Deterministic randomness helpers. std::uniform_int_distribution is
// implementation-defined, so bounded draws are done by rejection here.
// ---------------------------------------------------------------------------

inline std::uint64_t bounded_rand(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) return 0;
    const std::uint64_t threshold = (0 - n) % n;
    for (;;) {
        std::uint64_t r = rng();
        if (r >= threshold) return r % n;
    }
}

// In-place Fisher-Yates.
template <typename T>
void seeded_shuffle(std::vector<T>& items, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    for (std::size_t i = items.size(); i > 1; --i) {
        std::size_t j = static_cast<std::size_t>(bounded_rand(rng, i));
        std::swap(items[i - 1], items[j]);
    }
}

// ---------------------------------------------------------------------------
// String helpers.
// ---------------------------------------------------------------------------

inline std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline bool starts_with_icase(std::string_view text, std::string_view prefix) {
    if (text.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (std::tolower(static_cast<unsigned char>(text[i])) !=
            std::tolower(static_cast<unsigned char>(prefix[i])))
            return false;
    }
    return true;
}

inline bool contains_icase(std::string_view text, std::string_view needle) {
    if (needle.empty()) return true;
    auto it = std::search(text.begin(), text.end(), needle.begin(), needle.end(),
                          [](char a, char b) {
                              return std::tolower(static_cast<unsigned char>(a)) ==
                                     std::tolower(static_cast<unsigned char>(b));
                          });
    return it != text.end();
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t nl = text.find('\n', start);
        if (nl == std::string_view::npos) {
            lines.emplace_back(text.substr(start));
            break;
        }
        std::string line(text.substr(start, nl - start));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        lines.push_back(std::move(line));
        start = nl + 1;
    }
    return lines;
}

inline std::vector<std::string> nonempty_lines(std::string_view text) {
    std::vector<std::string> out;
    for (auto& line : split_lines(text)) {
        std::string t = trim(line);
        if (!t.empty()) out.push_back(std::move(t));
    }
    return out;
}

inline std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Clock abstraction so retry backoff and rate limiting are testable with a
// virtual clock.
// ---------------------------------------------------------------------------

class Clock {
public:
    virtual ~Clock() = default;
    virtual std::chrono::steady_clock::time_point now() = 0;
    virtual void sleep_for(std::chrono::milliseconds d) = 0;
};

class SystemClock final : public Clock {
public:
    std::chrono::steady_clock::time_point now() override { return std::chrono::steady_clock::now(); }
    void sleep_for(std::chrono::milliseconds d) override { std::this_thread::sleep_for(d); }
};

inline Clock& system_clock() {
    static SystemClock clock;
    return clock;
}

// Virtual clock: sleep_for advances time instantly.
class ManualClock final : public Clock {
public:
    std::chrono::steady_clock::time_point now() override {
        std::lock_guard<std::mutex> lock(mutex_);
        return now_;
    }
    void sleep_for(std::chrono::milliseconds d) override { advance(d); }
    void advance(std::chrono::milliseconds d) {
        std::lock_guard<std::mutex> lock(mutex_);
        now_ += d;
    }

private:
    std::mutex mutex_;
    std::chrono::steady_clock::time_point now_{};
};

}  // namespace fraudbench
