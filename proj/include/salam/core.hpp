#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "salam/error.hpp"

namespace salam::core {

struct Option {
    char label;
    std::string content;

    bool operator==(const Option&) const = default;
};

// Record as it arrives from a dataset file, before validation.
struct RawRecord {
    std::optional<std::string> id;
    std::string task;
    std::optional<std::string> question;
    std::optional<std::vector<std::string>> options;
    // Source-provided labels are only checked for duplicates; labels are
    // always regenerated from option order.
    std::optional<std::vector<std::string>> labels;
    std::optional<std::int64_t> answer;
};

// One multi-choice query with its gold answer. Only constructible through
// make_example(), so every instance satisfies the label invariants.
class TaskExample {
public:
    const std::string& id() const noexcept { return id_; }
    const std::string& task() const noexcept { return task_; }
    const std::string& question() const noexcept { return question_; }
    const std::vector<Option>& options() const noexcept { return options_; }
    char answer_label() const noexcept { return options_[answer_index_].label; }
    const std::string& answer_content() const noexcept { return options_[answer_index_].content; }
    std::size_t answer_index() const noexcept { return answer_index_; }

    // "(C) right winger"
    std::string gold_answer() const;

    bool operator==(const TaskExample&) const = default;

private:
    friend TaskExample make_example(const RawRecord& raw);

    TaskExample() = default;

    std::string id_;
    std::string task_;
    std::string question_;
    std::vector<Option> options_;
    std::size_t answer_index_ = 0;
};

TaskExample make_example(const RawRecord& raw);

constexpr std::size_t kMaxOptions = 26;

inline char label_for(std::size_t index) { return static_cast<char>('A' + index); }

// "(C)"
std::string label_token(char label);

struct Attempt {
    std::string example_id;
    std::string response;
    bool passed = false;
    std::uint32_t iteration = 0;

    bool operator==(const Attempt&) const = default;
};

struct ContextItem {
    std::string query;
    std::string target;
    std::vector<std::string> wrong_answers;
    std::optional<std::string> guideline;
    double similarity = 0.0;

    bool operator==(const ContextItem&) const = default;
};

// s_t = {q, y_t, c_t}; an empty context is the initial state.
struct AssistState {
    std::string query;
    std::string response;
    std::vector<ContextItem> context;
};

class FeedbackNote {
public:
    // Throws invalid_argument when the guideline is blank.
    FeedbackNote(std::string explanation, std::string guideline);

    const std::string& explanation() const noexcept { return explanation_; }
    const std::string& guideline() const noexcept { return guideline_; }

    bool operator==(const FeedbackNote&) const = default;

private:
    std::string explanation_;
    std::string guideline_;
};

class RewardRecord {
public:
    RewardRecord(std::string example_id, std::uint32_t iteration, int reward);

    const std::string& example_id() const noexcept { return example_id_; }
    std::uint32_t iteration() const noexcept { return iteration_; }
    int reward() const noexcept { return reward_; }

    bool operator==(const RewardRecord&) const = default;

private:
    std::string example_id_;
    std::uint32_t iteration_;
    int reward_;
};

// 64-bit FNV-1a; stable across platforms, used for hashing tokens, ids and
// task names into seeds.
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Seeded generator whose draws are identical on every standard library:
// mt19937_64's output sequence is fixed by the standard, and bounded draws
// use rejection sampling instead of std::uniform_int_distribution.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next() { return engine_(); }

    // Uniform in [0, bound). bound must be > 0.
    std::uint64_t uniform_index(std::uint64_t bound);

    // Uniform in [0, 1).
    double uniform_real();

    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform_index(i));
            std::swap(items[i - 1], items[j]);
        }
    }

    // k distinct indices from [0, n) in draw order (partial Fisher-Yates).
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::mt19937_64 engine_;
};

std::string trim(std::string_view text);

enum class LogLevel { debug, info, warn };

using LogSink = std::function<void(LogLevel, std::string_view)>;

// Replaces the process-wide sink (default: warnings to stderr). Returns the
// previous one.
LogSink set_log_sink(LogSink sink);
void log(LogLevel level, std::string_view message);

}  // namespace salam::core
