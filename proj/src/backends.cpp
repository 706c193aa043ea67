#include "salam/backends.hpp"

#include <json.hpp>

#include <fstream>
#include <sstream>

#include "salam/core.hpp"
#include "salam/error.hpp"

namespace salam::backends {

using nlohmann::json;

MatchKind parse_match_kind(std::string_view name) {
    if (name == "exact") return MatchKind::exact;
    if (name == "substring") return MatchKind::substring;
    if (name == "prefix") return MatchKind::prefix;
    throw Error(ErrorKind::invalid_argument, "unknown rule match kind \"" + std::string(name) + "\"");
}

std::string_view to_string(MatchKind kind) {
    switch (kind) {
        case MatchKind::exact: return "exact";
        case MatchKind::substring: return "substring";
        case MatchKind::prefix: return "prefix";
    }
    return "substring";
}

bool ScriptedRule::matches(std::string_view prompt) const {
    switch (match) {
        case MatchKind::exact: return prompt == pattern;
        case MatchKind::substring: return prompt.find(pattern) != std::string_view::npos;
        case MatchKind::prefix: return prompt.substr(0, pattern.size()) == pattern;
    }
    return false;
}

ScriptedBackend::ScriptedBackend(std::vector<ScriptedRule> rules, std::optional<std::string> default_reply,
                                 std::string name)
    : rules_(std::move(rules)), default_(std::move(default_reply)), name_(std::move(name)) {}

ScriptedBackend ScriptedBackend::from_json(std::string_view text, std::string name) {
    try {
        auto j = json::parse(text);
        std::vector<ScriptedRule> rules;
        for (const auto& r : j.value("rules", json::array())) {
            ScriptedRule rule;
            rule.match = parse_match_kind(r.value("match", std::string("substring")));
            rule.pattern = r.at("pattern").get<std::string>();
            rule.reply = r.at("reply").get<std::string>();
            rule.priority = r.value("priority", 0);
            rules.push_back(std::move(rule));
        }
        std::optional<std::string> def;
        if (j.contains("default") && !j["default"].is_null()) def = j["default"].get<std::string>();
        return ScriptedBackend(std::move(rules), std::move(def), std::move(name));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::invalid_argument, std::string("bad scripted ruleset: ") + e.what());
    }
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io_failure, "cannot open ruleset " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    return from_json(buf.str(), "scripted:" + path.filename().string());
}

std::optional<std::size_t> ScriptedBackend::select(std::string_view prompt) const {
    std::optional<std::size_t> best;
    for (std::size_t i = 0; i < rules_.size(); ++i) {
        if (!rules_[i].matches(prompt)) continue;
        if (!best || rules_[i].priority > rules_[*best].priority) best = i;
    }
    return best;
}

std::string ScriptedBackend::complete(std::string_view prompt, const GenParams&) {
    if (core::trim(prompt).empty()) throw Error(ErrorKind::invalid_argument, "prompt is empty");
    if (auto i = select(prompt)) return rules_[*i].reply;
    if (default_) return *default_;
    throw Error(ErrorKind::no_rule, "no scripted rule matches and no default reply is set");
}

RemoteChatBackend::RemoteChatBackend(RemoteBackendConfig config)
    : config_(std::move(config)), endpoint_(http::parse_url(config_.url)), permits_(std::max(1, config_.permits)) {}

std::string RemoteChatBackend::id() const {
    return "remote:" + config_.model + "@" + config_.url;
}

std::string RemoteChatBackend::complete(std::string_view prompt, const GenParams& params) {
    if (core::trim(prompt).empty()) throw Error(ErrorKind::invalid_argument, "prompt is empty");
    json body{{"model", config_.model},
              {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
              {"temperature", params.temperature},
              {"max_tokens", params.max_tokens}};
    if (!params.stop_sequences.empty()) body["stop"] = params.stop_sequences;

    std::string raw;
    permits_.acquire();
    try {
        raw = http::post_json({endpoint_, body.dump(), config_.api_key, config_.timeout}, config_.retry);
    } catch (...) {
        permits_.release();
        throw;
    }
    permits_.release();

    try {
        auto reply = json::parse(raw);
        const auto& content = reply.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const json::exception& e) {
        throw Error(ErrorKind::provider_unavailable, std::string("malformed chat response: ") + e.what());
    }
}

}  // namespace salam::backends
