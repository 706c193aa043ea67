#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "salam/core.hpp"
#include "salam/embed.hpp"
#include "salam/retrieval_kernels.hpp"

namespace salam::memory {

enum class Polarity { mistakes, correct };

std::string_view to_string(Polarity p);

// e_i: key k_i plus values {t_i0, v_i1, v_i2, ...}.
struct MistakeEntry {
    std::string key;
    embed::Embedding key_embedding;
    std::string target;
    std::vector<std::string> wrong_answers;
    std::optional<core::FeedbackNote> guideline;
    std::string task;

    bool operator==(const MistakeEntry&) const = default;
};

enum class ScanPolicy { automatic, serial, parallel };

// The global collection O_tr (or O_corr when polarity is `correct`).
//
// Not internally synchronized: any number of concurrent const calls, or a
// single mutating caller.
class Store {
public:
    Store(Polarity polarity, std::size_t dim);

    Polarity polarity() const noexcept { return polarity_; }
    std::size_t dim() const noexcept { return dim_; }
    std::size_t size() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }
    const std::vector<MistakeEntry>& entries() const noexcept { return entries_; }
    const MistakeEntry& entry(std::size_t index) const { return entries_.at(index); }

    std::optional<std::size_t> find(std::string_view key) const;

    // Records a failed answer for `query`. A new key is embedded with
    // `provider`; an existing key only gains `wrong` if it is not already
    // recorded. The target is fixed by the first insert. Returns whether the
    // store changed.
    bool insert_mistake(const embed::EmbeddingProvider& provider, std::string_view query, std::string_view target,
                        std::string_view wrong, std::string_view task);

    // Records a reward-1 attempt (correct polarity only). Returns whether the
    // store changed.
    bool insert_correct(const embed::EmbeddingProvider& provider, std::string_view query, std::string_view target,
                        std::string_view task);

    // Adds a fully formed entry (e.g. read back from disk) after checking the
    // key, polarity and wrong-answer invariants. Its embedding is kept as is.
    void adopt(MistakeEntry entry);

    void set_guideline(std::size_t index, core::FeedbackNote note);

    // Entries with cosine(query, key) >= theta, best first, ties by insertion
    // order, at most k.
    std::vector<kernels::Hit> search(const embed::Embedding& query, std::size_t k, double theta,
                                     ScanPolicy policy = ScanPolicy::automatic) const;

    std::vector<core::ContextItem> retrieve(const embed::Embedding& query, std::size_t k, double theta,
                                            ScanPolicy policy = ScanPolicy::automatic) const;
    std::vector<core::ContextItem> retrieve(const embed::EmbeddingProvider& provider, std::string_view query,
                                            std::size_t k, double theta) const;

    bool operator==(const Store& other) const;

private:
    void append(MistakeEntry entry);
    void check_provider(const embed::EmbeddingProvider& provider) const;

    Polarity polarity_;
    std::size_t dim_;
    std::vector<MistakeEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::vector<double> key_rows_;  // entries_.size() x dim_, row-major
};

inline constexpr int kStoreSchemaVersion = 1;

// One JSON object per line:
// {"key","task","target","wrong","guideline":{"explanation","guideline"}|null,"embedding":[...],"v":1}
std::string serialize(const Store& store);
void save(const Store& store, const std::filesystem::path& path);

struct LoadOptions {
    // When set, every embedding must have this dimension.
    std::optional<std::size_t> expected_dim;
    // Polarity of an empty file, and checked against the entries otherwise.
    // Unset: inferred (entries without wrong answers mean `correct`).
    std::optional<Polarity> polarity;
};

Store parse(std::string_view text, const LoadOptions& options = {});
Store load(const std::filesystem::path& path, const LoadOptions& options = {});

}  // namespace salam::memory
