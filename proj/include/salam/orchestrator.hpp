#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "salam/assistant.hpp"
#include "salam/backends.hpp"
#include "salam/core.hpp"
#include "salam/embed.hpp"
#include "salam/memory.hpp"
#include "salam/student.hpp"

namespace salam::orchestrator {

// Written after every completed training example when checkpointing is on:
// {"completed_ids":[...], "store_path":..., "seed":...}
struct Checkpoint {
    std::vector<std::string> completed_ids;
    std::string store_path;
    std::uint64_t seed = 0;
    std::optional<std::string> correct_store_path;
};

Checkpoint load_checkpoint(const std::filesystem::path& path);
void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);

struct TrainingConfig {
    std::uint32_t max_iters = 2;
    double feedback_fraction = 1.0;
    std::uint64_t seed = 0;
    // Retrieval for refinement iterations.
    std::size_t k = 3;
    double theta = 0.9;
    // Ask the assistant for fresh feedback on every refinement iteration
    // instead of relying on cached guidelines only.
    bool live_feedback = false;
    backends::GenParams student_gen{};
    assistant::FeedbackOptions feedback{};
    int jobs = 1;
    // When set, the store (and the correct store, if any) are saved along
    // with a checkpoint after each example, and examples already listed in an
    // existing checkpoint are skipped.
    std::optional<std::filesystem::path> checkpoint_path;
    std::optional<std::filesystem::path> store_path;
    std::optional<std::filesystem::path> correct_store_path;
};

struct TrainingResult {
    std::vector<core::RewardRecord> rewards;
    std::vector<std::size_t> feedback_entries;  // indices selected for annotation
    assistant::AnnotateStats annotation;
    std::size_t skipped = 0;  // examples resumed from a checkpoint
};

// Number of entries that receive feedback: round(fraction * n).
std::size_t feedback_count(std::size_t entries, double fraction);

// Entries chosen for feedback, ascending.
std::vector<std::size_t> select_feedback_entries(std::size_t entries, double fraction, std::uint64_t seed);

// Iteration 0 answers zero-shot; every failed iteration adds its response to
// `store`; later iterations re-ask in salam mode with fresh retrieval (which
// may include the example's own earlier mistakes) until the grader passes or
// max_iters is reached. Reward-1 first attempts go to `correct_store` when
// given. Finally a seeded feedback_fraction of entries is annotated.
TrainingResult training_pass(std::span<const core::TaskExample> train, backends::TextBackend& student,
                             backends::TextBackend& assistant_backend, const embed::EmbeddingProvider& embedder,
                             memory::Store& store, const TrainingConfig& config,
                             memory::Store* correct_store = nullptr);

struct InferenceConfig {
    student::PromptMode mode = student::PromptMode::zero_shot;
    std::size_t k = 3;
    double theta = 0.9;
    backends::GenParams gen{};
    int jobs = 1;
    // Record backend failures as failed attempts instead of aborting.
    bool tolerate_errors = false;
    std::uint64_t pseudo_seed = 0;
    // Demonstration pool for pseudo_fewshot; defaults to the evaluated set.
    std::span<const core::TaskExample> pseudo_pool{};
    std::map<std::string, std::string> preambles;  // task -> instruction line
};

struct TaskTally {
    std::size_t correct = 0;
    std::size_t total = 0;
    bool operator==(const TaskTally&) const = default;
};

struct InferenceResult {
    std::vector<core::Attempt> attempts;
    std::vector<core::RewardRecord> rewards;
    std::map<std::string, TaskTally> per_task;
    std::optional<double> accuracy;  // unset for an empty test set
    std::size_t errors = 0;
};

// One guided attempt per example against a read-only store. Runs across
// examples with `jobs` OpenMP threads; jobs = 1 is the serial reference and
// yields identical results.
InferenceResult inference_pass(std::span<const core::TaskExample> test, const memory::Store* store,
                               const embed::EmbeddingProvider& embedder, backends::TextBackend& student_backend,
                               const InferenceConfig& config);

}  // namespace salam::orchestrator
