#include "salam/assistant.hpp"

#include <json.hpp>

#include <algorithm>
#include <cctype>
#include <exception>
#include <fstream>

#include "salam/error.hpp"

namespace salam::assistant {

using nlohmann::json;

namespace {

constexpr std::string_view kJsonRequest =
    "Please return a JSON with the following keys:\n"
    "Explanation: explain the potential reason for the model prediction\n"
    "Guideline: based on the reason, provide instruction as a prompt for the model to avoid similar mistakes\n"
    "Please do not mention the true answer or any specific option content in your response.";

constexpr std::string_view kReprompt =
    "\n\nYour previous reply was not valid JSON. Reply with only a JSON object with the keys Explanation and "
    "Guideline.";

std::string lower(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::optional<json> find_object(std::string_view reply) {
    auto whole = json::parse(reply, nullptr, false);
    if (!whole.is_discarded() && whole.is_object()) return whole;
    auto open = reply.find('{');
    auto close = reply.rfind('}');
    if (open == std::string_view::npos || close == std::string_view::npos || close <= open) return std::nullopt;
    auto inner = json::parse(reply.substr(open, close - open + 1), nullptr, false);
    if (inner.is_discarded() || !inner.is_object()) return std::nullopt;
    return inner;
}

}  // namespace

std::string build_feedback_prompt(const FeedbackRequest& request) {
    if (!request.target || core::trim(*request.target).empty()) {
        throw Error(ErrorKind::missing_target, "feedback prompts are built only for requests with a target");
    }
    const auto target = core::trim(*request.target);
    std::string out = core::trim(request.state.query);
    out += "\nWe get the answer " + core::trim(request.state.response) + " from the model while the true answer is " +
           target + ".\n";

    std::vector<std::string> prior;
    for (const auto& item : request.state.context) {
        for (const auto& w : item.wrong_answers) {
            auto t = core::trim(w);
            if (t.empty() || t.find(target) != std::string::npos) continue;
            if (std::find(prior.begin(), prior.end(), t) == prior.end()) prior.push_back(std::move(t));
        }
    }
    if (!prior.empty()) {
        out += "The model gave these wrong answers on similar questions:\n";
        for (const auto& w : prior) out += "- " + w + "\n";
    }
    out += kJsonRequest;
    return out;
}

std::optional<core::FeedbackNote> parse_feedback(std::string_view reply) {
    auto obj = find_object(reply);
    if (!obj) return std::nullopt;
    std::optional<std::string> explanation, guideline;
    for (const auto& [key, value] : obj->items()) {
        if (!value.is_string()) continue;
        const auto k = lower(core::trim(key));
        if (k == "explanation") explanation = value.get<std::string>();
        if (k == "guideline") guideline = value.get<std::string>();
    }
    if (!guideline || core::trim(*guideline).empty()) return std::nullopt;
    return core::FeedbackNote(core::trim(explanation.value_or("")), core::trim(*guideline));
}

FeedbackResult generate_feedback(const FeedbackRequest& request, backends::TextBackend& backend,
                                 const FeedbackOptions& options) {
    const auto prompt = build_feedback_prompt(request);
    std::string reply;
    int calls = 0;
    for (int attempt = 0; attempt <= std::max(0, options.max_reprompts); ++attempt) {
        reply = backend.complete(attempt == 0 ? prompt : prompt + std::string(kReprompt), options.gen);
        ++calls;
        if (auto note = parse_feedback(reply)) return {std::move(*note), false, calls};
    }
    const auto raw = core::trim(reply);
    if (raw.empty()) {
        throw Error(ErrorKind::provider_unavailable, "study assistant returned an empty reply");
    }
    core::log(core::LogLevel::warn, "feedback reply was not JSON after " + std::to_string(calls) +
                                        " tries; using the raw reply as the guideline");
    return {core::FeedbackNote("", raw), true, calls};
}

FeedbackRequest request_for_entry(const memory::MistakeEntry& entry) {
    if (entry.wrong_answers.empty()) {
        throw Error(ErrorKind::polarity_mismatch, "entry has no wrong answer to explain");
    }
    return FeedbackRequest{core::AssistState{entry.key, entry.wrong_answers.front(), {}}, entry.target};
}

AnnotateStats annotate_store(memory::Store& store, backends::TextBackend& backend, const AnnotateOptions& options) {
    if (store.polarity() != memory::Polarity::mistakes) {
        throw Error(ErrorKind::polarity_mismatch, "only mistake stores are annotated");
    }
    std::vector<std::size_t> pending;
    if (options.only) {
        pending = *options.only;
        std::sort(pending.begin(), pending.end());
        pending.erase(std::unique(pending.begin(), pending.end()), pending.end());
        if (!pending.empty() && pending.back() >= store.size()) {
            throw Error(ErrorKind::invalid_argument, "annotation index out of range");
        }
    } else {
        for (std::size_t i = 0; i < store.size(); ++i) pending.push_back(i);
    }
    std::erase_if(pending, [&](std::size_t i) { return store.entry(i).guideline.has_value(); });

    const auto n = static_cast<std::ptrdiff_t>(pending.size());
    std::vector<std::optional<FeedbackResult>> results(pending.size());
    std::vector<std::exception_ptr> errors(pending.size());
    const int jobs = std::max(1, options.jobs);

#pragma omp parallel for num_threads(jobs) schedule(dynamic) if (jobs > 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        try {
            results[idx] = generate_feedback(request_for_entry(store.entry(pending[idx])), backend, options.feedback);
        } catch (...) {
            errors[idx] = std::current_exception();
        }
    }

    AnnotateStats stats;
    std::exception_ptr first_error;
    for (std::size_t i = 0; i < pending.size(); ++i) {
        if (results[i]) {
            stats.backend_calls += static_cast<std::size_t>(results[i]->calls);
            stats.degraded += results[i]->degraded ? 1 : 0;
            ++stats.annotated;
            store.set_guideline(pending[i], std::move(results[i]->note));
        } else if (!first_error) {
            first_error = errors[i];
        }
    }
    if (first_error) std::rethrow_exception(first_error);
    return stats;
}

std::size_t export_finetune_records(const memory::Store& store, const std::filesystem::path& path) {
    std::vector<std::string> missing;
    for (const auto& e : store.entries()) {
        if (!e.guideline) missing.push_back(e.key.substr(0, e.key.find('\n')));
    }
    if (!missing.empty()) {
        std::string names;
        for (const auto& k : missing) names += (names.empty() ? "" : "; ") + k;
        throw Error(ErrorKind::unannotated_entries,
                    std::to_string(missing.size()) + " entries lack guidelines: " + names);
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorKind::io_failure, "cannot write " + path.string());
    std::size_t count = 0;
    for (const auto& e : store.entries()) {
        const auto request = request_for_entry(e);
        json completion{{"Explanation", e.guideline->explanation()}, {"Guideline", e.guideline->guideline()}};
        json record{{"prompt", build_feedback_prompt(request)},
                    {"completion", completion.dump()},
                    {"has_context", !request.state.context.empty()}};
        f << record.dump() << '\n';
        ++count;
    }
    if (!f.flush()) throw Error(ErrorKind::io_failure, "write failed for " + path.string());
    return count;
}

}  // namespace salam::assistant
