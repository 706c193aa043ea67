#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "salam/http.hpp"

namespace salam::backends {

struct GenParams {
    int max_tokens = 256;
    double temperature = 0.0;
    std::vector<std::string> stop_sequences;
};

// Text generation used both by the student and by the study assistant.
// Implementations must tolerate concurrent complete() calls.
class TextBackend {
public:
    virtual ~TextBackend() = default;
    virtual std::string complete(std::string_view prompt, const GenParams& params) = 0;
    virtual std::string id() const = 0;
};

enum class MatchKind { exact, substring, prefix };

struct ScriptedRule {
    MatchKind match = MatchKind::substring;
    std::string pattern;
    std::string reply;
    int priority = 0;

    bool matches(std::string_view prompt) const;
};

// Deterministic backend: the highest-priority matching rule replies (the
// first defined wins ties), otherwise the default reply.
class ScriptedBackend final : public TextBackend {
public:
    ScriptedBackend(std::vector<ScriptedRule> rules, std::optional<std::string> default_reply,
                    std::string name = "scripted");

    // {"rules":[{"match","pattern","reply","priority"}], "default": text|null}
    static ScriptedBackend from_json(std::string_view text, std::string name = "scripted");
    static ScriptedBackend from_file(const std::filesystem::path& path);

    std::string complete(std::string_view prompt, const GenParams& params) override;
    std::string id() const override { return name_; }

    // Index of the rule that fires, or nullopt when the default applies.
    std::optional<std::size_t> select(std::string_view prompt) const;

    const std::vector<ScriptedRule>& rules() const noexcept { return rules_; }
    const std::optional<std::string>& default_reply() const noexcept { return default_; }

private:
    std::vector<ScriptedRule> rules_;
    std::optional<std::string> default_;
    std::string name_;
};

MatchKind parse_match_kind(std::string_view name);
std::string_view to_string(MatchKind kind);

struct RemoteBackendConfig {
    std::string url;  // full chat endpoint, e.g. https://host/v1/chat/completions
    std::string model;
    std::string api_key;  // usually from SALAM_MODEL_API_KEY
    std::chrono::milliseconds timeout{60'000};
    int permits = 4;
    http::RetryPolicy retry{};
};

// POST {"model","messages":[{"role":"user","content":prompt}],"temperature","max_tokens"}
// and return choices[0].message.content.
class RemoteChatBackend final : public TextBackend {
public:
    explicit RemoteChatBackend(RemoteBackendConfig config);

    std::string complete(std::string_view prompt, const GenParams& params) override;
    std::string id() const override;

private:
    RemoteBackendConfig config_;
    http::Endpoint endpoint_;
    std::counting_semaphore<1024> permits_;
};

// Forwards to another backend and counts calls.
class CountingBackend final : public TextBackend {
public:
    explicit CountingBackend(TextBackend& inner) : inner_(inner) {}

    std::string complete(std::string_view prompt, const GenParams& params) override {
        calls_.fetch_add(1, std::memory_order_relaxed);
        return inner_.complete(prompt, params);
    }
    std::string id() const override { return inner_.id(); }
    std::size_t calls() const noexcept { return calls_.load(std::memory_order_relaxed); }

private:
    TextBackend& inner_;
    std::atomic<std::size_t> calls_{0};
};

// Adapts a callable; handy for tests and for composing backends.
class FunctionBackend final : public TextBackend {
public:
    using Fn = std::function<std::string(std::string_view, const GenParams&)>;
    FunctionBackend(Fn fn, std::string name) : fn_(std::move(fn)), name_(std::move(name)) {}

    std::string complete(std::string_view prompt, const GenParams& params) override { return fn_(prompt, params); }
    std::string id() const override { return name_; }

private:
    Fn fn_;
    std::string name_;
};

}  // namespace salam::backends
