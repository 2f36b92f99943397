#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <memory>
#include <mutex>
#include <semaphore>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "llmpc/prompt_codec.hpp"

namespace llmpc {

// Transport/endpoint failure. Harness code converts this into a per-trial
// parse failure; it never aborts an experiment.
class BackendError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configuration (bad kind, missing credential, bad config file).
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Replay transcript missing, exhausted, or drifted from the issued prompts.
class ReplayError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct CompletionRequest {
    std::string prompt;
    int max_tokens = 16;
    double temperature = 0.0;
    std::vector<std::string> stop = {"."};
};

enum class BackendKind { HttpCompletion, NnMock, MalformedMock, Replay };

inline const char* backend_kind_name(BackendKind kind) {
    switch (kind) {
        case BackendKind::HttpCompletion: return "http_completion";
        case BackendKind::NnMock: return "nn_mock";
        case BackendKind::MalformedMock: return "malformed_mock";
        case BackendKind::Replay: return "replay";
    }
    return "unknown";
}

inline BackendKind backend_kind_from_name(std::string_view name) {
    if (name == "http_completion") return BackendKind::HttpCompletion;
    if (name == "nn_mock") return BackendKind::NnMock;
    if (name == "malformed_mock") return BackendKind::MalformedMock;
    if (name == "replay") return BackendKind::Replay;
    throw ConfigError("unknown backend kind: " + std::string(name));
}

struct BackendConfig {
    BackendKind kind = BackendKind::NnMock;
    std::string endpoint_url;    // http_completion only
    std::string api_key_env;     // env var holding the bearer token; empty = no auth
    std::string model;           // model name sent in the request body
    double timeout_s = 30.0;
    int max_inflight = 4;
    int retries = 2;
    double backoff_base_s = 1.0;  // exponential, doubles per retry
    std::string replay_path;      // replay only
};

// Uniform completion interface. complete() returns the continuation text
// only, never the prompt.
class Backend {
public:
    virtual ~Backend() = default;
    virtual std::string complete(const CompletionRequest& req) = 0;

    // True when completions must be requested in deterministic order
    // (replay consumption, transcript recording). The harness drops to a
    // single worker for such backends.
    virtual bool requires_ordered_calls() const { return false; }
};

// --------------------------------------------------------------------------
// deterministic offline backends

// Label of the shot nearest to the query in squared distance over the four
// encoded gains; ties resolve to the earliest shot.
inline std::string nn_mock_complete(const EncodedEpisode& e) {
    if (e.shot_gains.empty())
        throw BackendError("nn_mock: episode has no shots");
    std::size_t best = 0;
    long best_dist = std::numeric_limits<long>::max();
    for (std::size_t s = 0; s < e.shot_gains.size(); ++s) {
        long dist = 0;
        for (int k = 0; k < 4; ++k) {
            const long d = e.shot_gains[s][k] - e.query_gains[k];
            dist += d * d;
        }
        if (dist < best_dist) {
            best_dist = dist;
            best = s;
        }
    }
    return std::to_string(e.shot_powers[best][0]) + ", " +
           std::to_string(e.shot_powers[best][1]) + ".";
}

// Nearest-neighbor stand-in for a live model: recovers the shots from the
// prompt text and answers with the closest shot's label. Pure in the prompt,
// so it exercises the full few-shot pipeline deterministically.
class NnMockBackend final : public Backend {
public:
    std::string complete(const CompletionRequest& req) override {
        const auto parsed = parse_prompt(req.prompt);
        if (!parsed || parsed->shot_gains.empty())
            throw BackendError("nn_mock: prompt does not match the few-shot grammar");
        EncodedEpisode e;
        e.shot_gains = parsed->shot_gains;
        e.shot_powers = parsed->shot_labels;
        e.query_gains = parsed->query_gains;
        return nn_mock_complete(e);
    }
};

// Always answers in a shape the codec must reject.
class MalformedMockBackend final : public Backend {
public:
    std::string complete(const CompletionRequest&) override {
        return "I cannot determine the power.";
    }
};

// --------------------------------------------------------------------------
// replay transcripts

struct ReplayEntry {
    std::uint64_t prompt_hash = 0;
    std::string completion;
};

// FNV-1a 64-bit, stable across platforms.
inline std::uint64_t prompt_hash(std::string_view text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

namespace detail {

inline std::string escape_completion(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            case '\r': out += "\\r"; break;
            default: out += c;
        }
    }
    return out;
}

inline std::string unescape_completion(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] != '\\' || i + 1 == s.size()) {
            out += s[i];
            continue;
        }
        switch (s[++i]) {
            case 'n': out += '\n'; break;
            case 't': out += '\t'; break;
            case 'r': out += '\r'; break;
            default: out += s[i];
        }
    }
    return out;
}

}  // namespace detail

// Line format: <16-hex prompt hash> TAB <escaped completion>.
inline void record_replay(const std::string& path, const std::vector<ReplayEntry>& transcript) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ReplayError("replay: cannot open for writing: " + path);
    for (const auto& entry : transcript) {
        char hash_hex[17];
        std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                      static_cast<unsigned long long>(entry.prompt_hash));
        out << hash_hex << '\t' << detail::escape_completion(entry.completion) << '\n';
    }
    if (!out.good()) throw ReplayError("replay: write failed: " + path);
}

inline std::vector<ReplayEntry> load_replay(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ReplayError("replay: cannot open: " + path);
    std::vector<ReplayEntry> entries;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto tab = line.find('\t');
        if (tab != 16 || line.size() < 17)
            throw ReplayError("replay: malformed line " + std::to_string(line_no) + " in " + path);
        std::uint64_t hash = 0;
        for (char c : line.substr(0, 16)) {
            int digit;
            if (c >= '0' && c <= '9') digit = c - '0';
            else if (c >= 'a' && c <= 'f') digit = c - 'a' + 10;
            else
                throw ReplayError("replay: bad hash on line " + std::to_string(line_no));
            hash = (hash << 4) | static_cast<std::uint64_t>(digit);
        }
        entries.push_back({hash, detail::unescape_completion(line.substr(tab + 1))});
    }
    return entries;
}

// Replays a recorded transcript in order, validating each issued prompt's
// hash so stale transcripts fail loudly instead of silently desynchronizing.
class ReplayBackend final : public Backend {
public:
    explicit ReplayBackend(std::vector<ReplayEntry> entries) : entries_(std::move(entries)) {}

    static std::unique_ptr<ReplayBackend> from_file(const std::string& path) {
        return std::make_unique<ReplayBackend>(load_replay(path));
    }

    std::string complete(const CompletionRequest& req) override {
        std::lock_guard lock(mutex_);
        if (next_ >= entries_.size())
            throw ReplayError("replay: transcript exhausted after " +
                              std::to_string(entries_.size()) + " completions");
        const auto& entry = entries_[next_];
        if (entry.prompt_hash != prompt_hash(req.prompt))
            throw ReplayError("replay: prompt mismatch at transcript index " +
                              std::to_string(next_));
        ++next_;
        return entry.completion;
    }

    bool requires_ordered_calls() const override { return true; }

private:
    std::vector<ReplayEntry> entries_;
    std::size_t next_ = 0;
    std::mutex mutex_;
};

// Wraps another backend and captures (prompt hash, completion) pairs for a
// later deterministic rerun.
class RecordingBackend final : public Backend {
public:
    explicit RecordingBackend(Backend& inner) : inner_(inner) {}

    std::string complete(const CompletionRequest& req) override {
        std::string text = inner_.complete(req);
        std::lock_guard lock(mutex_);
        transcript_.push_back({prompt_hash(req.prompt), text});
        return text;
    }

    bool requires_ordered_calls() const override { return true; }

    const std::vector<ReplayEntry>& transcript() const { return transcript_; }
    void save(const std::string& path) const { record_replay(path, transcript_); }

private:
    Backend& inner_;
    std::vector<ReplayEntry> transcript_;
    std::mutex mutex_;
};

// --------------------------------------------------------------------------
// remote completion endpoint

// POST {model, prompt, max_tokens, temperature, stop} to endpoint_url,
// bearer token from the environment, completion text under choices[0].text.
// Retries transport and non-2xx failures with exponential backoff; at most
// max_inflight requests are outstanding at once.
class HttpBackend final : public Backend {
public:
    explicit HttpBackend(const BackendConfig& cfg)
        : cfg_(cfg), inflight_(std::max(1, cfg.max_inflight)) {
        split_url(cfg_.endpoint_url, base_, path_);
        if (!cfg_.api_key_env.empty()) {
            const char* key = std::getenv(cfg_.api_key_env.c_str());
            if (key == nullptr || *key == '\0')
                throw ConfigError("http backend: environment variable " + cfg_.api_key_env +
                                  " is not set");
            bearer_ = key;
        }
    }

    std::string complete(const CompletionRequest& req) override {
        inflight_.acquire();
        struct Release {
            std::counting_semaphore<>& sem;
            ~Release() { sem.release(); }
        } release{inflight_};

        const std::string body = make_body(req);
        std::string last_error;
        for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
            if (attempt > 0) {
                const double delay = cfg_.backoff_base_s * std::pow(2.0, attempt - 1);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            httplib::Client client(base_);
            client.set_connection_timeout(std::chrono::duration<double>(cfg_.timeout_s));
            client.set_read_timeout(std::chrono::duration<double>(cfg_.timeout_s));
            if (!bearer_.empty()) client.set_bearer_token_auth(bearer_);

            auto res = client.Post(path_, body, "application/json");
            if (!res) {
                last_error = "transport error: " + httplib::to_string(res.error());
                continue;
            }
            if (res->status < 200 || res->status >= 300) {
                last_error = "http status " + std::to_string(res->status);
                continue;
            }
            return extract_completion(res->body);
        }
        throw BackendError("http backend: " + last_error + " after " +
                           std::to_string(cfg_.retries + 1) + " attempts");
    }

private:
    static void split_url(const std::string& url, std::string& base, std::string& path) {
        const auto scheme_end = url.find("://");
        if (scheme_end == std::string::npos)
            throw ConfigError("http backend: endpoint_url must include a scheme: " + url);
        const auto path_start = url.find('/', scheme_end + 3);
        if (path_start == std::string::npos) {
            base = url;
            path = "/";
        } else {
            base = url.substr(0, path_start);
            path = url.substr(path_start);
        }
    }

    std::string make_body(const CompletionRequest& req) const {
        nlohmann::json body;
        body["model"] = cfg_.model;
        body["prompt"] = req.prompt;
        body["max_tokens"] = req.max_tokens;
        body["temperature"] = req.temperature;
        body["stop"] = req.stop;
        return body.dump();
    }

    static std::string extract_completion(const std::string& body) {
        nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
        if (j.is_discarded() || !j.contains("choices") || !j["choices"].is_array() ||
            j["choices"].empty() || !j["choices"][0].contains("text") ||
            !j["choices"][0]["text"].is_string())
            throw BackendError("http backend: response lacks choices[0].text");
        return j["choices"][0]["text"].get<std::string>();
    }

    BackendConfig cfg_;
    std::string base_;
    std::string path_;
    std::string bearer_;
    std::counting_semaphore<> inflight_;
};

inline std::unique_ptr<Backend> make_backend(const BackendConfig& cfg) {
    switch (cfg.kind) {
        case BackendKind::HttpCompletion:
            if (cfg.endpoint_url.empty())
                throw ConfigError("http backend: endpoint_url is required");
            return std::make_unique<HttpBackend>(cfg);
        case BackendKind::NnMock:
            return std::make_unique<NnMockBackend>();
        case BackendKind::MalformedMock:
            return std::make_unique<MalformedMockBackend>();
        case BackendKind::Replay:
            if (cfg.replay_path.empty())
                throw ConfigError("replay backend: replay_path is required");
            return ReplayBackend::from_file(cfg.replay_path);
    }
    throw ConfigError("unknown backend kind");
}

}  // namespace llmpc
