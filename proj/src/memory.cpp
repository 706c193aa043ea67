#include "salam/memory.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <sstream>

#include "salam/error.hpp"

namespace salam::memory {

using nlohmann::json;

std::string_view to_string(Polarity p) {
    return p == Polarity::mistakes ? "mistakes" : "correct";
}

Store::Store(Polarity polarity, std::size_t dim) : polarity_(polarity), dim_(dim) {
    if (dim == 0) throw Error(ErrorKind::invalid_argument, "store dimension must be positive");
}

std::optional<std::size_t> Store::find(std::string_view key) const {
    auto it = index_.find(std::string(key));
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

void Store::check_provider(const embed::EmbeddingProvider& provider) const {
    if (provider.dim() != dim_) {
        throw Error(ErrorKind::dimension_mismatch, "store holds " + std::to_string(dim_) +
                                                       "-dim keys but provider " + provider.id() + " emits " +
                                                       std::to_string(provider.dim()));
    }
}

void Store::append(MistakeEntry entry) {
    if (entry.key_embedding.dim() != dim_) {
        throw Error(ErrorKind::dimension_mismatch, "entry embedding has dim " +
                                                       std::to_string(entry.key_embedding.dim()) + ", store has " +
                                                       std::to_string(dim_));
    }
    auto values = entry.key_embedding.values();
    key_rows_.insert(key_rows_.end(), values.begin(), values.end());
    index_.emplace(entry.key, entries_.size());
    entries_.push_back(std::move(entry));
}

bool Store::insert_mistake(const embed::EmbeddingProvider& provider, std::string_view query,
                           std::string_view target, std::string_view wrong, std::string_view task) {
    if (polarity_ != Polarity::mistakes) {
        throw Error(ErrorKind::polarity_mismatch, "insert_mistake on a correct-answer store");
    }
    auto key = core::trim(query);
    auto wrong_answer = core::trim(wrong);
    auto tgt = core::trim(target);
    if (key.empty() || wrong_answer.empty()) {
        throw Error(ErrorKind::invalid_argument, "mistake needs a non-empty query and wrong answer");
    }

    if (auto idx = find(key)) {
        auto& e = entries_[*idx];
        if (wrong_answer == e.target) {
            throw Error(ErrorKind::invalid_argument, "wrong answer equals the stored target");
        }
        if (std::find(e.wrong_answers.begin(), e.wrong_answers.end(), wrong_answer) != e.wrong_answers.end()) {
            return false;
        }
        e.wrong_answers.push_back(std::move(wrong_answer));
        return true;
    }

    if (wrong_answer == tgt) {
        throw Error(ErrorKind::invalid_argument, "wrong answer equals the target");
    }
    check_provider(provider);
    auto embedding = provider.embed(key);
    append(MistakeEntry{key, std::move(embedding), tgt, {std::move(wrong_answer)}, std::nullopt, std::string(task)});
    return true;
}

bool Store::insert_correct(const embed::EmbeddingProvider& provider, std::string_view query,
                           std::string_view target, std::string_view task) {
    if (polarity_ != Polarity::correct) {
        throw Error(ErrorKind::polarity_mismatch, "insert_correct on a mistake store");
    }
    auto key = core::trim(query);
    if (key.empty()) throw Error(ErrorKind::invalid_argument, "correct entry needs a non-empty query");
    if (find(key)) return false;
    check_provider(provider);
    auto embedding = provider.embed(key);
    append(MistakeEntry{key, std::move(embedding), core::trim(target), {}, std::nullopt, std::string(task)});
    return true;
}

void Store::adopt(MistakeEntry entry) {
    const std::string where = "entry \"" + entry.key.substr(0, 60) + "\"";
    if (entry.key.empty()) throw Error(ErrorKind::invalid_argument, "entry key is empty");
    if (find(entry.key)) throw Error(ErrorKind::invalid_argument, "duplicate key for " + where);
    if (polarity_ == Polarity::correct && !entry.wrong_answers.empty()) {
        throw Error(ErrorKind::polarity_mismatch, where + " has wrong answers in a correct-answer store");
    }
    if (polarity_ == Polarity::mistakes) {
        if (entry.wrong_answers.empty()) {
            throw Error(ErrorKind::polarity_mismatch, where + " has no wrong answers in a mistake store");
        }
        auto sorted = entry.wrong_answers;
        std::sort(sorted.begin(), sorted.end());
        if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
            throw Error(ErrorKind::invalid_argument, where + " repeats a wrong answer");
        }
        if (std::binary_search(sorted.begin(), sorted.end(), entry.target)) {
            throw Error(ErrorKind::invalid_argument, where + " lists its target as a wrong answer");
        }
    }
    append(std::move(entry));
}

void Store::set_guideline(std::size_t index, core::FeedbackNote note) {
    entries_.at(index).guideline = std::move(note);
}

std::vector<kernels::Hit> Store::search(const embed::Embedding& query, std::size_t k, double theta,
                                        ScanPolicy policy) const {
    if (k == 0) throw Error(ErrorKind::invalid_argument, "retrieval k must be >= 1");
    if (query.dim() != dim_) {
        throw Error(ErrorKind::dimension_mismatch, "query embedding has dim " + std::to_string(query.dim()) +
                                                       ", store has " + std::to_string(dim_));
    }
    std::vector<double> scores(entries_.size());
    if (policy == ScanPolicy::automatic) {
        policy = key_rows_.size() >= (std::size_t{1} << 16) ? ScanPolicy::parallel : ScanPolicy::serial;
    }
    if (policy == ScanPolicy::parallel) {
        kernels::score_rows_parallel(key_rows_, dim_, query.values(), scores);
    } else {
        kernels::score_rows_serial(key_rows_, dim_, query.values(), scores);
    }
    return kernels::select_top(scores, k, theta);
}

std::vector<core::ContextItem> Store::retrieve(const embed::Embedding& query, std::size_t k, double theta,
                                               ScanPolicy policy) const {
    std::vector<core::ContextItem> items;
    for (const auto& hit : search(query, k, theta, policy)) {
        const auto& e = entries_[hit.index];
        core::ContextItem item{e.key, e.target, e.wrong_answers, std::nullopt, hit.similarity};
        if (e.guideline) item.guideline = e.guideline->guideline();
        items.push_back(std::move(item));
    }
    return items;
}

std::vector<core::ContextItem> Store::retrieve(const embed::EmbeddingProvider& provider, std::string_view query,
                                               std::size_t k, double theta) const {
    if (k == 0) throw Error(ErrorKind::invalid_argument, "retrieval k must be >= 1");
    if (entries_.empty()) return {};
    check_provider(provider);
    return retrieve(provider.embed(query), k, theta);
}

bool Store::operator==(const Store& other) const {
    return polarity_ == other.polarity_ && dim_ == other.dim_ && entries_ == other.entries_;
}

namespace {

json entry_to_json(const MistakeEntry& e) {
    json j;
    j["key"] = e.key;
    j["task"] = e.task;
    j["target"] = e.target;
    j["wrong"] = e.wrong_answers;
    if (e.guideline) {
        j["guideline"] = {{"explanation", e.guideline->explanation()}, {"guideline", e.guideline->guideline()}};
    } else {
        j["guideline"] = nullptr;
    }
    j["embedding"] = std::vector<double>(e.key_embedding.values().begin(), e.key_embedding.values().end());
    j["v"] = kStoreSchemaVersion;
    return j;
}

[[noreturn]] void corrupt(std::size_t line_no, const std::string& why) {
    throw Error(ErrorKind::corrupt_line, "store line " + std::to_string(line_no) + ": " + why);
}

MistakeEntry entry_from_json(const json& j, std::size_t line_no) {
    if (!j.is_object()) corrupt(line_no, "not a JSON object");
    if (!j.contains("v") || !j["v"].is_number_integer()) corrupt(line_no, "missing schema version \"v\"");
    if (j["v"].get<int>() != kStoreSchemaVersion) {
        throw Error(ErrorKind::schema_version, "store line " + std::to_string(line_no) + ": schema version " +
                                                   j["v"].dump() + ", expected " +
                                                   std::to_string(kStoreSchemaVersion));
    }
    try {
        std::optional<core::FeedbackNote> note;
        const auto& g = j.at("guideline");
        if (!g.is_null()) {
            note.emplace(g.at("explanation").get<std::string>(), g.at("guideline").get<std::string>());
        }
        auto embedding = embed::Embedding::from_unit(j.at("embedding").get<std::vector<double>>());
        MistakeEntry e{j.at("key").get<std::string>(),
                       std::move(embedding),
                       j.at("target").get<std::string>(),
                       j.at("wrong").get<std::vector<std::string>>(),
                       std::move(note),
                       j.at("task").get<std::string>()};
        if (e.key.empty()) corrupt(line_no, "empty key");
        return e;
    } catch (const json::exception& ex) {
        corrupt(line_no, ex.what());
    } catch (const Error& ex) {
        if (ex.kind() == ErrorKind::corrupt_line) throw;
        corrupt(line_no, ex.what());
    }
}

}  // namespace

std::string serialize(const Store& store) {
    std::string out;
    for (const auto& e : store.entries()) {
        out += entry_to_json(e).dump();
        out += '\n';
    }
    return out;
}

void save(const Store& store, const std::filesystem::path& path) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
        if (!f) throw Error(ErrorKind::io_failure, "cannot write " + tmp.string());
        f << serialize(store);
        if (!f.flush()) throw Error(ErrorKind::io_failure, "write failed for " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorKind::io_failure, "cannot move " + tmp.string() + " to " + path.string());
}

Store parse(std::string_view text, const LoadOptions& options) {
    std::vector<MistakeEntry> entries;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) end = text.size();
        auto line = text.substr(pos, end - pos);
        pos = end + 1;
        ++line_no;
        if (core::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& ex) {
            corrupt(line_no, std::string("invalid JSON: ") + ex.what());
        }
        entries.push_back(entry_from_json(j, line_no));
    }

    std::size_t dim = options.expected_dim.value_or(0);
    if (!entries.empty()) {
        const auto found = entries.front().key_embedding.dim();
        if (options.expected_dim && found != *options.expected_dim) {
            throw Error(ErrorKind::dimension_mismatch, "store has " + std::to_string(found) +
                                                           "-dim embeddings, session expects " +
                                                           std::to_string(*options.expected_dim));
        }
        dim = found;
    }
    if (dim == 0) dim = embed::HashingEmbedder::kDefaultDim;

    Polarity polarity = options.polarity.value_or(Polarity::mistakes);
    if (!entries.empty()) {
        const bool correct = entries.front().wrong_answers.empty();
        const Polarity inferred = correct ? Polarity::correct : Polarity::mistakes;
        if (options.polarity && *options.polarity != inferred) {
            throw Error(ErrorKind::polarity_mismatch,
                        "store file holds " + std::string(to_string(inferred)) + " entries, expected " +
                            std::string(to_string(*options.polarity)));
        }
        polarity = inferred;
    }

    Store store(polarity, dim);
    for (auto& e : entries) store.adopt(std::move(e));
    return store;
}

Store load(const std::filesystem::path& path, const LoadOptions& options) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error(ErrorKind::io_failure, "cannot open store " + path.string());
    std::ostringstream buf;
    buf << f.rdbuf();
    if (f.bad()) throw Error(ErrorKind::io_failure, "read failed for " + path.string());
    return parse(buf.str(), options);
}

}  // namespace salam::memory
