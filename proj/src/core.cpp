#include "salam/core.hpp"

#include <cctype>
#include <iostream>
#include <mutex>
#include <set>

namespace salam::core {

namespace {

[[noreturn]] void malformed(const std::string& what) {
    throw Error(ErrorKind::malformed_record, what);
}

bool is_blank(std::string_view s) {
    for (char c : s) {
        if (!std::isspace(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

}  // namespace

std::string label_token(char label) {
    return std::string{'(', label, ')'};
}

std::string TaskExample::gold_answer() const {
    return label_token(answer_label()) + " " + answer_content();
}

TaskExample make_example(const RawRecord& raw) {
    if (!raw.question) malformed("missing field \"question\"");
    if (is_blank(*raw.question)) malformed("empty question");
    if (!raw.options) malformed("missing field \"options\"");
    if (!raw.answer) malformed("missing field \"answer\"");
    if (raw.task.empty()) malformed("missing field \"task\"");

    const auto& opts = *raw.options;
    if (opts.size() < 2) malformed("need at least 2 options, got " + std::to_string(opts.size()));
    if (opts.size() > kMaxOptions) malformed("more than 26 options");
    if (*raw.answer < 0 || static_cast<std::uint64_t>(*raw.answer) >= opts.size()) {
        malformed("answer index " + std::to_string(*raw.answer) + " out of range for " +
                  std::to_string(opts.size()) + " options");
    }
    if (raw.labels) {
        if (raw.labels->size() != opts.size()) malformed("label count differs from option count");
        std::set<std::string> seen;
        for (const auto& l : *raw.labels) {
            if (!seen.insert(trim(l)).second) malformed("duplicate option label \"" + l + "\"");
        }
    }

    TaskExample ex;
    ex.task_ = raw.task;
    ex.question_ = trim(*raw.question);
    ex.id_ = raw.id.value_or("");
    ex.answer_index_ = static_cast<std::size_t>(*raw.answer);
    std::set<std::string> contents;
    for (std::size_t i = 0; i < opts.size(); ++i) {
        auto content = trim(opts[i]);
        if (content.empty()) malformed("option " + std::to_string(i) + " is empty");
        if (content.find('\n') != std::string::npos) {
            malformed("option " + std::to_string(i) + " spans multiple lines");
        }
        if (!contents.insert(content).second) malformed("duplicate option \"" + content + "\"");
        ex.options_.push_back(Option{label_for(i), std::move(content)});
    }
    return ex;
}

FeedbackNote::FeedbackNote(std::string explanation, std::string guideline)
    : explanation_(std::move(explanation)), guideline_(std::move(guideline)) {
    if (is_blank(guideline_)) {
        throw Error(ErrorKind::invalid_argument, "feedback guideline must be non-empty");
    }
}

RewardRecord::RewardRecord(std::string example_id, std::uint32_t iteration, int reward)
    : example_id_(std::move(example_id)), iteration_(iteration), reward_(reward) {
    if (reward != 0 && reward != 1) {
        throw Error(ErrorKind::invalid_argument, "reward must be 0 or 1");
    }
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::uint64_t Rng::uniform_index(std::uint64_t bound) {
    if (bound == 0) throw Error(ErrorKind::invalid_argument, "uniform_index bound must be positive");
    // Reject the top partial bucket so every residue is equally likely.
    const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound + 1) % bound;
    std::uint64_t x;
    do {
        x = engine_();
    } while (x > limit);
    return x % bound;
}

double Rng::uniform_real() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

std::vector<std::size_t> Rng::sample_indices(std::size_t n, std::size_t k) {
    if (k > n) throw Error(ErrorKind::invalid_argument, "cannot sample more indices than available");
    std::vector<std::size_t> pool(n);
    for (std::size_t i = 0; i < n; ++i) pool[i] = i;
    for (std::size_t i = 0; i < k; ++i) {
        auto j = i + static_cast<std::size_t>(uniform_index(n - i));
        std::swap(pool[i], pool[j]);
    }
    pool.resize(k);
    return pool;
}

std::string trim(std::string_view text) {
    std::size_t b = 0, e = text.size();
    while (b < e && std::isspace(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(text[e - 1]))) --e;
    return std::string(text.substr(b, e - b));
}

namespace {

std::mutex& sink_mutex() {
    static std::mutex m;
    return m;
}

LogSink& sink() {
    static LogSink s = [](LogLevel level, std::string_view msg) {
        if (level == LogLevel::warn) std::cerr << "[salam] warning: " << msg << '\n';
    };
    return s;
}

}  // namespace

LogSink set_log_sink(LogSink next) {
    std::lock_guard lock(sink_mutex());
    auto prev = std::move(sink());
    sink() = std::move(next);
    return prev;
}

void log(LogLevel level, std::string_view message) {
    std::lock_guard lock(sink_mutex());
    if (sink()) sink()(level, message);
}

}  // namespace salam::core
