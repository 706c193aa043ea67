#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "salam/backends.hpp"
#include "salam/core.hpp"
#include "salam/memory.hpp"

namespace salam::assistant {

// Training-phase requests carry the target; inference never builds one.
struct FeedbackRequest {
    core::AssistState state;
    std::optional<std::string> target;
};

// rho(q, c_t, y_t). Throws missing_target for requests without a target.
std::string build_feedback_prompt(const FeedbackRequest& request);

struct FeedbackOptions {
    backends::GenParams gen{512, 0.0, {}};
    int max_reprompts = 2;
};

// Parses {"Explanation": ..., "Guideline": ...} (keys case-insensitive) out
// of a reply, tolerating surrounding prose. nullopt when there is no usable
// guideline.
std::optional<core::FeedbackNote> parse_feedback(std::string_view reply);

struct FeedbackResult {
    core::FeedbackNote note;
    bool degraded = false;  // no parseable JSON; raw reply used as guideline
    int calls = 0;
};

// pi(a|s): asks the backend, re-prompting up to options.max_reprompts times
// on unparseable replies before falling back to the raw reply.
FeedbackResult generate_feedback(const FeedbackRequest& request, backends::TextBackend& backend,
                                 const FeedbackOptions& options = {});

// Request used for a store entry: its key, first wrong answer, no context.
FeedbackRequest request_for_entry(const memory::MistakeEntry& entry);

struct AnnotateOptions {
    FeedbackOptions feedback{};
    // Restrict to these entry indices; all entries when unset.
    std::optional<std::vector<std::size_t>> only;
    int jobs = 1;
};

struct AnnotateStats {
    std::size_t annotated = 0;
    std::size_t degraded = 0;
    std::size_t backend_calls = 0;
};

// Gives every selected entry lacking a guideline one. Existing guidelines are
// kept. Calls may run concurrently; results are applied in entry order. On a
// backend error, every entry that did get feedback keeps it and the first
// error is rethrown.
AnnotateStats annotate_store(memory::Store& store, backends::TextBackend& backend,
                             const AnnotateOptions& options = {});

// JSONL {"prompt","completion","has_context"}; returns the record count.
// Throws unannotated_entries (naming the keys) before writing anything.
std::size_t export_finetune_records(const memory::Store& store, const std::filesystem::path& path);

}  // namespace salam::assistant
