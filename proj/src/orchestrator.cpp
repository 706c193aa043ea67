#include "salam/orchestrator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <exception>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "salam/error.hpp"
#include "salam/grader.hpp"

namespace salam::orchestrator {

using nlohmann::json;

namespace {

// Placeholder recorded for a blank generation so the failure still lands in
// the store.
constexpr std::string_view kEmptyResponse = "(empty response)";

}  // namespace

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io_failure, "cannot open checkpoint " + path.string());
    try {
        auto j = json::parse(f);
        Checkpoint cp;
        cp.completed_ids = j.at("completed_ids").get<std::vector<std::string>>();
        cp.store_path = j.at("store_path").get<std::string>();
        cp.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("correct_store_path") && !j["correct_store_path"].is_null()) {
            cp.correct_store_path = j["correct_store_path"].get<std::string>();
        }
        return cp;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::corrupt_line, "bad checkpoint " + path.string() + ": " + e.what());
    }
}

void save_checkpoint(const Checkpoint& checkpoint, const std::filesystem::path& path) {
    json j{{"completed_ids", checkpoint.completed_ids}, {"store_path", checkpoint.store_path}, {"seed", checkpoint.seed}};
    if (checkpoint.correct_store_path) j["correct_store_path"] = *checkpoint.correct_store_path;
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::io_failure, "cannot write checkpoint " + tmp.string());
        f << j.dump() << '\n';
        if (!f.flush()) throw Error(ErrorKind::io_failure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::io_failure, "cannot move checkpoint into " + path.string());
}

std::size_t feedback_count(std::size_t entries, double fraction) {
    const auto n = static_cast<long long>(std::llround(fraction * static_cast<double>(entries)));
    return static_cast<std::size_t>(std::clamp<long long>(n, 0, static_cast<long long>(entries)));
}

std::vector<std::size_t> select_feedback_entries(std::size_t entries, double fraction, std::uint64_t seed) {
    core::Rng rng(seed);
    auto picked = rng.sample_indices(entries, feedback_count(entries, fraction));
    std::sort(picked.begin(), picked.end());
    return picked;
}

TrainingResult training_pass(std::span<const core::TaskExample> train, backends::TextBackend& student,
                             backends::TextBackend& assistant_backend, const embed::EmbeddingProvider& embedder,
                             memory::Store& store, const TrainingConfig& config, memory::Store* correct_store) {
    if (config.max_iters < 1) throw Error(ErrorKind::invalid_argument, "max_iters must be >= 1");
    if (!(config.feedback_fraction > 0.0 && config.feedback_fraction <= 1.0)) {
        throw Error(ErrorKind::invalid_argument, "feedback_fraction must be in (0, 1]");
    }
    if (store.polarity() != memory::Polarity::mistakes) {
        throw Error(ErrorKind::polarity_mismatch, "training collects mistakes into a mistake store");
    }
    if (correct_store && correct_store->polarity() != memory::Polarity::correct) {
        throw Error(ErrorKind::polarity_mismatch, "correct-answer store has the wrong polarity");
    }
    if (config.checkpoint_path && !config.store_path) {
        throw Error(ErrorKind::invalid_argument, "checkpointing needs a store path");
    }

    Checkpoint checkpoint;
    std::unordered_set<std::string> completed;
    if (config.checkpoint_path) {
        checkpoint.store_path = config.store_path->string();
        checkpoint.seed = config.seed;
        if (config.correct_store_path) checkpoint.correct_store_path = config.correct_store_path->string();
        if (std::filesystem::exists(*config.checkpoint_path)) {
            auto previous = load_checkpoint(*config.checkpoint_path);
            if (previous.seed != config.seed) {
                throw Error(ErrorKind::invalid_argument, "checkpoint was written with a different seed");
            }
            checkpoint.completed_ids = previous.completed_ids;
            completed.insert(previous.completed_ids.begin(), previous.completed_ids.end());
        }
    }

    TrainingResult result;
    for (const auto& example : train) {
        if (completed.count(example.id())) {
            ++result.skipped;
            continue;
        }
        const auto key = student::query_block(example);
        const auto gold = example.gold_answer();
        std::string last_response;

        for (std::uint32_t iter = 0; iter < config.max_iters; ++iter) {
            std::string prompt;
            if (iter == 0) {
                prompt = student::build_prompt(example, student::PromptRequest{});
            } else {
                student::PromptRequest req;
                req.mode = student::PromptMode::salam;
                req.context = store.retrieve(embedder, key, config.k, config.theta);
                req.guidelines = student::collect_guidelines(req.context);
                if (config.live_feedback) {
                    assistant::FeedbackRequest fr{{key, last_response, req.context}, gold};
                    auto fb = assistant::generate_feedback(fr, assistant_backend, config.feedback);
                    const auto& g = fb.note.guideline();
                    if (std::find(req.guidelines.begin(), req.guidelines.end(), g) == req.guidelines.end()) {
                        req.guidelines.insert(req.guidelines.begin(), g);
                    }
                }
                prompt = student::build_prompt(example, req);
            }

            auto response = student.complete(prompt, config.student_gen);
            const int r = grader::reward(response, example);
            result.rewards.emplace_back(example.id(), iter, r);
            if (r == 1) {
                if (iter == 0 && correct_store) correct_store->insert_correct(embedder, key, gold, example.task());
                break;
            }
            last_response = core::trim(response).empty() ? std::string(kEmptyResponse) : core::trim(response);
            store.insert_mistake(embedder, key, gold, last_response, example.task());
        }

        if (config.checkpoint_path) {
            memory::save(store, *config.store_path);
            if (correct_store && config.correct_store_path) memory::save(*correct_store, *config.correct_store_path);
            checkpoint.completed_ids.push_back(example.id());
            save_checkpoint(checkpoint, *config.checkpoint_path);
        }
    }

    result.feedback_entries = select_feedback_entries(store.size(), config.feedback_fraction, config.seed);
    assistant::AnnotateOptions opts;
    opts.feedback = config.feedback;
    opts.only = result.feedback_entries;
    opts.jobs = config.jobs;
    try {
        result.annotation = assistant::annotate_store(store, assistant_backend, opts);
    } catch (...) {
        if (config.checkpoint_path) memory::save(store, *config.store_path);
        throw;
    }
    if (config.checkpoint_path) memory::save(store, *config.store_path);
    return result;
}

InferenceResult inference_pass(std::span<const core::TaskExample> test, const memory::Store* store,
                               const embed::EmbeddingProvider& embedder, backends::TextBackend& student_backend,
                               const InferenceConfig& config) {
    if (config.mode == student::PromptMode::salam && store) {
        const auto& entries = store->entries();
        if (!entries.empty() &&
            std::none_of(entries.begin(), entries.end(), [](const auto& e) { return e.guideline.has_value(); })) {
            core::log(core::LogLevel::warn, "salam inference over a store without any cached guideline");
        }
    }
    const auto pool = config.pseudo_pool.empty() ? test : config.pseudo_pool;

    const auto n = static_cast<std::ptrdiff_t>(test.size());
    std::vector<core::Attempt> attempts(test.size());
    std::vector<std::exception_ptr> errors(test.size());
    const int jobs = std::max(1, config.jobs);

#pragma omp parallel for num_threads(jobs) schedule(dynamic) if (jobs > 1)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
        const auto idx = static_cast<std::size_t>(i);
        const auto& ex = test[idx];
        try {
            student::AnswerOptions opts;
            opts.mode = config.mode;
            opts.k = config.k;
            opts.theta = config.theta;
            opts.gen = config.gen;
            if (student::is_pseudo(config.mode)) {
                opts.pseudo = student::make_pseudo_inputs(ex, pool, config.mode, config.pseudo_seed);
                if (auto it = config.preambles.find(ex.task()); it != config.preambles.end()) {
                    opts.preamble = it->second;
                }
            }
            attempts[idx] = student::answer(ex, store, embedder, student_backend, opts);
        } catch (...) {
            errors[idx] = std::current_exception();
            attempts[idx] = core::Attempt{ex.id(), "", false, 0};
        }
    }

    InferenceResult result;
    for (std::size_t i = 0; i < test.size(); ++i) {
        if (errors[i]) {
            bool backend_failure = false;
            try {
                std::rethrow_exception(errors[i]);
            } catch (const Error& e) {
                backend_failure = !is_validation_error(e.kind());
            } catch (...) {
            }
            if (!config.tolerate_errors || !backend_failure) std::rethrow_exception(errors[i]);
            ++result.errors;
        }
        const auto& a = attempts[i];
        result.rewards.emplace_back(a.example_id, 0, a.passed ? 1 : 0);
        auto& tally = result.per_task[test[i].task()];
        ++tally.total;
        tally.correct += a.passed ? 1 : 0;
    }
    if (!test.empty()) {
        std::size_t correct = 0;
        for (const auto& a : attempts) correct += a.passed ? 1 : 0;
        result.accuracy = static_cast<double>(correct) / static_cast<double>(test.size());
    }
    result.attempts = std::move(attempts);
    return result;
}

}  // namespace salam::orchestrator
