#pragma once

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "salam/backends.hpp"
#include "salam/core.hpp"
#include "salam/embed.hpp"
#include "salam/memory.hpp"
#include "salam/orchestrator.hpp"
#include "salam/student.hpp"

namespace salam::harness {

struct IngestResult {
    std::vector<core::TaskExample> examples;
    // In order of first appearance in the file.
    std::vector<std::pair<std::string, std::size_t>> task_counts;
};

// JSONL records {"task","question","options":[...],"answer":index} with an
// optional "id" (default "<task>-<line>"). Errors name the line.
IngestResult ingest(const std::filesystem::path& path);
IngestResult ingest_text(std::string_view text);

core::TaskExample parse_record(const nlohmann::json& record, std::size_t line_no);
nlohmann::json to_json(const core::TaskExample& example);

// Task names in order of first appearance.
std::vector<std::string> task_order(std::span<const core::TaskExample> examples);

struct SplitSpec {
    double train_fraction = 0.8;
    std::uint64_t seed = 0;
};

struct Split {
    std::vector<core::TaskExample> train;
    std::vector<core::TaskExample> test;
};

// Per task: seeded shuffle, first floor(n * train_fraction) go to train.
Split split(std::span<const core::TaskExample> examples, const SplitSpec& spec);

// Order-independent hash of the example ids, hex encoded.
std::string membership_hash(std::span<const core::TaskExample> examples);

struct EvalReport {
    std::map<std::string, double> per_task;
    std::optional<double> min;
    std::optional<double> max;
    std::optional<double> average;  // unweighted mean over tasks
    std::size_t examples = 0;
    nlohmann::json config = nlohmann::json::object();
    std::vector<core::RewardRecord> rewards;
};

EvalReport make_report(const orchestrator::InferenceResult& result, nlohmann::json config);
nlohmann::json to_json(const EvalReport& report);
EvalReport report_from_json(const nlohmann::json& j);
// Aligned columns for terminals.
std::string to_text(const EvalReport& report);

struct Backends {
    backends::TextBackend& student;
    backends::TextBackend& assistant;
    const embed::EmbeddingProvider& embedder;
};

struct ExperimentConfig {
    std::size_t k = 3;
    double theta = 0.9;
    std::uint64_t seed = 0;  // feedback selection and pseudo labels
    std::uint32_t max_iters = 2;
    double feedback_fraction = 1.0;
    bool live_feedback = false;
    int jobs = 1;
    bool tolerate_errors = false;
    backends::GenParams student_gen{};
    assistant::FeedbackOptions feedback{};
    std::map<std::string, std::string> preambles;
    // Copied into every report's config.
    nlohmann::json snapshot = nlohmann::json::object();
};

struct TrainedStores {
    memory::Store mistakes;
    memory::Store correct;
    orchestrator::TrainingResult training;
};

// O_err via training_pass, O_corr from reward-1 first attempts.
TrainedStores build_stores(std::span<const core::TaskExample> train, const Backends& backends,
                           const ExperimentConfig& config);

// Evaluates one mode on `test` against the matching store.
EvalReport evaluate(std::span<const core::TaskExample> test, student::PromptMode mode, const TrainedStores& stores,
                    const Backends& backends, const ExperimentConfig& config, std::size_t k, double theta,
                    std::span<const core::TaskExample> pseudo_pool = {});

std::vector<EvalReport> run_matrix(std::span<const core::TaskExample> train, std::span<const core::TaskExample> test,
                                   std::span<const student::PromptMode> modes, const Backends& backends,
                                   const ExperimentConfig& config);

struct CurvePoint {
    double value;
    student::PromptMode mode;
    std::optional<double> accuracy;

    bool operator==(const CurvePoint&) const = default;
};

// Accuracy per k at a fixed theta (0 accepts everything).
std::vector<CurvePoint> sweep_topk(std::span<const core::TaskExample> test, const TrainedStores& stores,
                                   std::span<const student::PromptMode> modes, std::span<const std::size_t> k_values,
                                   const Backends& backends, const ExperimentConfig& config, double theta = 0.0);

// Accuracy per theta at a fixed k.
std::vector<CurvePoint> sweep_theta(std::span<const core::TaskExample> test, const TrainedStores& stores,
                                    std::span<const student::PromptMode> modes, std::span<const double> theta_values,
                                    const Backends& backends, const ExperimentConfig& config, std::size_t k = 10);

// "value,mode,accuracy" header plus one row per point.
std::string to_csv(std::span<const CurvePoint> curve);

// Pseudo-mistake prompting over the whole set, no split.
EvalReport pseudo_mistake_eval(std::span<const core::TaskExample> full_set, student::PromptMode mode,
                               const Backends& backends, const ExperimentConfig& config);

struct OodSplit {
    std::vector<core::TaskExample> in_domain;
    std::vector<core::TaskExample> out_of_domain;
};

// First in_domain_count tasks (file order) vs the rest.
OodSplit ood_split(std::span<const core::TaskExample> examples, std::size_t in_domain_count);

// Mistakes are collected on the in-domain tasks only; each mode is evaluated
// on the out-of-domain tasks with k = 1.
std::vector<EvalReport> ood_eval(std::span<const core::TaskExample> examples, std::size_t in_domain_count,
                                 std::span<const student::PromptMode> modes, const Backends& backends,
                                 const ExperimentConfig& config);

}  // namespace salam::harness
