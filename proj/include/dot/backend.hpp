#pragma once
// Provider-agnostic model access. One contract, two implementations: a live
// chat-completion HTTP client with retries, and a deterministic scripted
// mock for tests and replayable runs. Both are safe for concurrent
// complete() calls.

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <functional>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "dot/errors.hpp"

namespace dot {

using json = nlohmann::json;

inline constexpr double kDefaultTemperature = 0.7;
inline constexpr int kDefaultMaxTokens = 1024;

// One sampling request. Temperature defaults to 0.7 unless overridden.
struct CompletionRequest {
    std::string prompt;
    double temperature = kDefaultTemperature;
    int max_tokens = kDefaultMaxTokens;
    std::optional<std::int64_t> seed_hint;

    void validate() const {
        if (temperature < 0.0 || temperature > 2.0) {
            throw ValidationError("temperature must be in [0, 2]");
        }
        if (max_tokens < 1) {
            throw ValidationError("max_tokens must be positive");
        }
    }
};

inline void to_json(json& j, const CompletionRequest& r) {
    j = json{{"prompt", r.prompt},
             {"temperature", r.temperature},
             {"max_tokens", r.max_tokens}};
    if (r.seed_hint) j["seed_hint"] = *r.seed_hint;
}

inline void from_json(const json& j, CompletionRequest& r) {
    j.at("prompt").get_to(r.prompt);
    j.at("temperature").get_to(r.temperature);
    j.at("max_tokens").get_to(r.max_tokens);
    if (j.contains("seed_hint")) {
        r.seed_hint = j.at("seed_hint").get<std::int64_t>();
    } else {
        r.seed_hint.reset();
    }
}

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t hash = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        hash ^= c;
        hash *= 1099511628211ull;
    }
    return hash;
}

inline std::string fnv1a64_hex(std::string_view bytes) {
    std::ostringstream out;
    out << std::hex << std::setw(16) << std::setfill('0') << fnv1a64(bytes);
    return out.str();
}

// FNV-1a 64-bit over a canonical serialization of the request:
// prompt, temperature, max_tokens and seed hint joined by unit separators.
inline std::string request_fingerprint(const CompletionRequest& r) {
    std::string canon = r.prompt;
    canon.push_back('\x1f');
    canon += std::to_string(r.temperature);
    canon.push_back('\x1f');
    canon += std::to_string(r.max_tokens);
    canon.push_back('\x1f');
    canon += r.seed_hint ? std::to_string(*r.seed_hint) : "none";
    return fnv1a64_hex(canon);
}

struct Completion {
    std::string text;
    std::chrono::microseconds latency{0};
    std::string provider;
    std::string request_fingerprint;
};

class Backend {
  public:
    virtual ~Backend() = default;
    virtual Completion complete(const CompletionRequest& request) = 0;

    virtual bool records_calls() const { return false; }
    virtual const std::vector<CompletionRequest>& recorded_calls() const {
        throw UnsupportedError("this backend does not record its calls");
    }
};

// Ordered list of every request the backend has issued so far.
inline const std::vector<CompletionRequest>& call_log(const Backend& backend) {
    if (!backend.records_calls()) {
        throw UnsupportedError("call log requested from a non-recording backend");
    }
    return backend.recorded_calls();
}

// ---------------------------------------------------------------------------
// Scripted mock

// One scripted reply. When match is set, the incoming prompt must contain
// it or the call fails.
struct ScriptEntry {
    std::optional<std::string> match;
    std::string response;
};

inline void to_json(json& j, const ScriptEntry& e) {
    j = json{{"response", e.response}};
    if (e.match) j["match"] = *e.match;
}

inline void from_json(const json& j, ScriptEntry& e) {
    j.at("response").get_to(e.response);
    if (j.contains("match")) {
        e.match = j.at("match").get<std::string>();
    } else {
        e.match.reset();
    }
}

// Script files are one self-describing object per line: {"response": ...,
// "match": ...?}. Blank lines are skipped.
inline std::vector<ScriptEntry> load_script(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw ParseError("cannot open script file: " + path, 0);
    }
    std::vector<ScriptEntry> script;
    std::string line;
    std::size_t offset = 0;
    while (std::getline(in, line)) {
        std::size_t line_start = offset;
        offset += line.size() + 1;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            script.push_back(json::parse(line).get<ScriptEntry>());
        } catch (const json::exception& e) {
            throw ParseError("bad script entry in " + path + ": " + e.what(),
                             line_start);
        }
    }
    return script;
}

// Deterministic test double: pops scripted entries in order, records every
// satisfied request, never touches the network. Script consumption is
// serialized behind a lock so concurrent callers stay well-defined; call
// order is deterministic only when the caller serializes.
class MockBackend : public Backend {
  public:
    explicit MockBackend(std::vector<ScriptEntry> script)
        : script_(std::move(script)) {}

    Completion complete(const CompletionRequest& request) override {
        request.validate();
        std::lock_guard<std::mutex> lock(mutex_);
        if (cursor_ >= script_.size()) {
            throw ScriptUnderrunError("script exhausted after " +
                                      std::to_string(script_.size()) + " entries");
        }
        const ScriptEntry& entry = script_[cursor_];
        if (entry.match && request.prompt.find(*entry.match) == std::string::npos) {
            throw ScriptMismatchError(
                "script entry " + std::to_string(cursor_) +
                    " expected the prompt to contain \"" + *entry.match + "\"",
                *entry.match);
        }
        ++cursor_;
        log_.push_back(request);
        return Completion{entry.response, std::chrono::microseconds{0}, "mock",
                          request_fingerprint(request)};
    }

    bool records_calls() const override { return true; }
    const std::vector<CompletionRequest>& recorded_calls() const override { return log_; }

    std::size_t remaining() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return script_.size() - cursor_;
    }

  private:
    std::vector<ScriptEntry> script_;
    std::size_t cursor_ = 0;
    std::vector<CompletionRequest> log_;
    mutable std::mutex mutex_;
};

// Wraps any backend and records the requests that pass through.
class RecordingBackend : public Backend {
  public:
    explicit RecordingBackend(Backend& inner) : inner_(inner) {}

    Completion complete(const CompletionRequest& request) override {
        Completion completion = inner_.complete(request);
        std::lock_guard<std::mutex> lock(mutex_);
        log_.push_back(request);
        return completion;
    }

    bool records_calls() const override { return true; }
    const std::vector<CompletionRequest>& recorded_calls() const override { return log_; }

  private:
    Backend& inner_;
    std::vector<CompletionRequest> log_;
    mutable std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Live chat-completion client

// Common chat-completion wire shape: role-tagged message list, temperature,
// max output tokens. The prompt string is carried byte-identical.
inline json build_wire_body(const CompletionRequest& r, const std::string& model) {
    json body{{"model", model},
              {"messages", json::array({json{{"role", "user"}, {"content", r.prompt}}})},
              {"temperature", r.temperature},
              {"max_tokens", r.max_tokens}};
    if (r.seed_hint) body["seed"] = *r.seed_hint;
    return body;
}

struct HttpOptions {
    std::string base_url;  // falls back to DOT_API_URL
    std::string path = "/v1/chat/completions";
    std::string api_key;   // falls back to DOT_API_KEY
    std::string model = "gpt-4";
    int max_attempts = 3;
    std::chrono::milliseconds backoff_base{250};
    unsigned jitter_seed = 0;
};

struct HttpResult {
    bool transport_ok = false;
    int status = 0;
    std::string body;
    std::string error;
};

// The transport is injectable so retry behaviour is testable offline.
using HttpTransport = std::function<HttpResult(const HttpOptions&, const std::string& body)>;

inline HttpResult default_http_transport(const HttpOptions& options, const std::string& body) {
    httplib::Client client(options.base_url);
    client.set_connection_timeout(30);
    client.set_read_timeout(120);
    httplib::Headers headers;
    if (!options.api_key.empty()) {
        headers.emplace("Authorization", "Bearer " + options.api_key);
    }
    auto res = client.Post(options.path, headers, body, "application/json");
    if (!res) {
        return HttpResult{false, 0, "", httplib::to_string(res.error())};
    }
    return HttpResult{true, res->status, res->body, ""};
}

inline std::string env_or_empty(const char* name) {
    const char* value = std::getenv(name);
    return value ? std::string(value) : std::string();
}

// Live client. Sends one chat request per completion, retries transient
// failures (connection loss, 429, 5xx) with exponential backoff and jitter.
class HttpBackend : public Backend {
  public:
    explicit HttpBackend(HttpOptions options, HttpTransport transport = default_http_transport)
        : options_(std::move(options)), transport_(std::move(transport)),
          jitter_rng_(options_.jitter_seed) {
        if (options_.base_url.empty()) options_.base_url = env_or_empty("DOT_API_URL");
        if (options_.api_key.empty()) options_.api_key = env_or_empty("DOT_API_KEY");
        if (options_.base_url.empty()) {
            throw ConfigError("live backend needs a base url (set DOT_API_URL)");
        }
    }

    Completion complete(const CompletionRequest& request) override {
        request.validate();
        const std::string body = build_wire_body(request, options_.model).dump();
        auto started = std::chrono::steady_clock::now();
        std::string last_error;
        for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
            HttpResult result = transport_(options_, body);
            if (result.transport_ok && result.status == 200) {
                auto latency = std::chrono::duration_cast<std::chrono::microseconds>(
                    std::chrono::steady_clock::now() - started);
                return Completion{extract_message_text(result, attempt), latency,
                                  "http:" + options_.model, request_fingerprint(request)};
            }
            if (!is_transient(result)) {
                throw TransportError("completion request failed with status " +
                                         std::to_string(result.status) + ": " + result.body,
                                     attempt);
            }
            last_error = result.transport_ok ? "status " + std::to_string(result.status)
                                             : result.error;
            if (attempt < options_.max_attempts) sleep_backoff(attempt);
        }
        throw TransportError("retries exhausted after " +
                                 std::to_string(options_.max_attempts) +
                                 " attempts: " + last_error,
                             options_.max_attempts);
    }

  private:
    static bool is_transient(const HttpResult& result) {
        if (!result.transport_ok) return true;
        return result.status == 429 || result.status >= 500;
    }

    std::string extract_message_text(const HttpResult& result, int attempt) const {
        try {
            json payload = json::parse(result.body);
            return payload.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw TransportError(std::string("malformed completion response: ") + e.what(),
                                 attempt);
        }
    }

    void sleep_backoff(int attempt) {
        std::chrono::milliseconds delay = options_.backoff_base * (1 << (attempt - 1));
        if (options_.backoff_base.count() > 0) {
            std::uniform_int_distribution<long> jitter(0, options_.backoff_base.count() / 2);
            std::lock_guard<std::mutex> lock(mutex_);
            delay += std::chrono::milliseconds(jitter(jitter_rng_));
        }
        if (delay.count() > 0) std::this_thread::sleep_for(delay);
    }

    HttpOptions options_;
    HttpTransport transport_;
    std::mt19937 jitter_rng_;
    std::mutex mutex_;
};

}  // namespace dot
