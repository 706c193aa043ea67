#include "salam/student.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "salam/error.hpp"
#include "salam/grader.hpp"

namespace salam::student {

namespace {

constexpr std::string_view kOptionsHeader = "Options:";
constexpr std::string_view kAnswerCue = "The answer is";
constexpr std::string_view kCorrectAnswerCue = "The correct answer is";

std::vector<std::string_view> split_lines(std::string_view text) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (true) {
        auto end = text.find('\n', pos);
        if (end == std::string_view::npos) {
            lines.push_back(text.substr(pos));
            break;
        }
        lines.push_back(text.substr(pos, end - pos));
        pos = end + 1;
    }
    return lines;
}

// Stored queries are rendered with a closing period after their last option
// when shown as retrieved context.
std::string context_block(const core::ContextItem& item) {
    return item.query + ".";
}

std::string mistake_lines(const core::ContextItem& item) {
    const auto correct = answer_reference(item.target, item.query);
    std::vector<std::string> seen;
    std::string out;
    for (const auto& wrong : item.wrong_answers) {
        auto ref = answer_reference(wrong, item.query);
        if (std::find(seen.begin(), seen.end(), ref) != seen.end()) continue;
        seen.push_back(ref);
        if (!out.empty()) out += '\n';
        out += "Previous wrong answer is " + ref + ". The correct answer is " + correct + ".";
    }
    return out;
}

std::string render_mistake_items(std::span<const core::ContextItem> context) {
    std::string out;
    for (const auto& item : context) {
        out += context_block(item);
        out += '\n';
        out += mistake_lines(item);
        out += "\n\n";
    }
    return out;
}

// Earliest "(X)" token naming one of `options`, if any.
std::optional<char> first_label_mention(std::string_view text, const std::vector<core::Option>& options) {
    for (std::size_t i = 0; i + 2 < text.size(); ++i) {
        if (text[i] != '(' || text[i + 2] != ')') continue;
        const char label = static_cast<char>(std::toupper(static_cast<unsigned char>(text[i + 1])));
        if (std::none_of(options.begin(), options.end(), [&](const core::Option& o) { return o.label == label; })) {
            continue;
        }
        if (grader::contains_label_token(text.substr(i == 0 ? 0 : i - 1, i == 0 ? 4 : 5), label)) return label;
    }
    return std::nullopt;
}

}  // namespace

std::string_view to_string(PromptMode mode) {
    switch (mode) {
        case PromptMode::zero_shot: return "zero_shot";
        case PromptMode::fewshot_correct: return "fewshot_correct";
        case PromptMode::fewshot_mistake: return "fewshot_mistake";
        case PromptMode::salam: return "salam";
        case PromptMode::pseudo_zero: return "pseudo_zero";
        case PromptMode::pseudo_fewshot: return "pseudo_fewshot";
    }
    return "zero_shot";
}

PromptMode parse_mode(std::string_view name) {
    for (auto m : kAllModes) {
        if (to_string(m) == name) return m;
    }
    throw Error(ErrorKind::invalid_argument, "unknown prompt mode \"" + std::string(name) + "\"");
}

bool uses_retrieval(PromptMode mode) {
    return mode == PromptMode::fewshot_correct || mode == PromptMode::fewshot_mistake || mode == PromptMode::salam;
}

bool is_pseudo(PromptMode mode) {
    return mode == PromptMode::pseudo_zero || mode == PromptMode::pseudo_fewshot;
}

memory::Polarity store_polarity(PromptMode mode) {
    return mode == PromptMode::fewshot_correct ? memory::Polarity::correct : memory::Polarity::mistakes;
}

std::string query_block(const core::TaskExample& example) {
    std::string out = example.question();
    out += '\n';
    out += kOptionsHeader;
    for (const auto& opt : example.options()) {
        out += '\n';
        out += core::label_token(opt.label);
        out += ' ';
        out += opt.content;
    }
    return out;
}

std::string build_prompt(const core::TaskExample& example, const PromptRequest& request) {
    const auto block = query_block(example);
    const auto needs_context = [&] {
        if (request.context.empty()) {
            throw Error(ErrorKind::missing_context,
                        std::string(to_string(request.mode)) + " prompt needs retrieved context");
        }
    };
    const auto wrong_label = [&]() -> char {
        if (!request.pseudo_wrong) {
            throw Error(ErrorKind::missing_pseudo_label,
                        std::string(to_string(request.mode)) + " prompt needs a pseudo-wrong label");
        }
        const char l = *request.pseudo_wrong;
        const auto& opts = example.options();
        if (std::none_of(opts.begin(), opts.end(), [&](const core::Option& o) { return o.label == l; })) {
            throw Error(ErrorKind::invalid_argument, std::string("pseudo-wrong label ") + l + " is not an option");
        }
        if (l == example.answer_label()) {
            throw Error(ErrorKind::invalid_argument, "pseudo-wrong label equals the gold label");
        }
        return l;
    };

    std::string out;
    switch (request.mode) {
        case PromptMode::zero_shot:
            out = block + "\n" + std::string(kAnswerCue);
            break;

        case PromptMode::fewshot_correct:
            needs_context();
            for (const auto& item : request.context) {
                out += context_block(item);
                out += "\n" + std::string(kAnswerCue) + " " + answer_reference(item.target, item.query) + "\n\n";
            }
            out += block + "\n" + std::string(kAnswerCue);
            break;

        case PromptMode::fewshot_mistake:
            needs_context();
            out += render_mistake_items(request.context);
            out += block + "\n" + std::string(kCorrectAnswerCue);
            break;

        case PromptMode::salam:
            for (const auto& g : request.guidelines) {
                out += core::trim(g);
                out += "\n\n";
            }
            out += render_mistake_items(request.context);
            out += block + "\n" + std::string(kCorrectAnswerCue);
            break;

        case PromptMode::pseudo_zero:
            out = block + "\n" + core::label_token(wrong_label()) + " is wrong";
            break;

        case PromptMode::pseudo_fewshot: {
            const char wrong = wrong_label();
            if (request.demos.size() != kPseudoDemoCount) {
                throw Error(ErrorKind::missing_context, "pseudo_fewshot needs exactly 3 demonstrations, got " +
                                                            std::to_string(request.demos.size()));
            }
            if (request.preamble && !core::trim(*request.preamble).empty()) {
                out += core::trim(*request.preamble) + "\n\n";
            }
            for (const auto& demo : request.demos) {
                if (demo.wrong_label == demo.example.answer_label()) {
                    throw Error(ErrorKind::invalid_argument, "demonstration pseudo label equals its gold label");
                }
                out += "Q: " + query_block(demo.example) + "\n" + core::label_token(demo.wrong_label) +
                       " is wrong\nA: " + core::label_token(demo.example.answer_label()) + "\n\n";
            }
            out += "Q: " + block + "\n" + core::label_token(wrong) + " is wrong\nA:";
            break;
        }
    }
    return out;
}

std::vector<std::string> collect_guidelines(std::span<const core::ContextItem> context) {
    std::vector<std::string> out;
    std::unordered_set<std::string> seen;
    for (const auto& item : context) {
        if (!item.guideline) continue;
        auto g = core::trim(*item.guideline);
        if (g.empty() || !seen.insert(g).second) continue;
        out.push_back(std::move(g));
    }
    return out;
}

char sample_pseudo_label(const core::TaskExample& example, core::Rng& rng) {
    const auto n = example.options().size();
    auto j = static_cast<std::size_t>(rng.uniform_index(n - 1));
    if (j >= example.answer_index()) ++j;
    return example.options()[j].label;
}

PseudoInputs make_pseudo_inputs(const core::TaskExample& example, std::span<const core::TaskExample> pool,
                                PromptMode mode, std::uint64_t seed) {
    core::Rng rng(core::fnv1a64(example.id()) ^ (seed * 0x9E3779B97F4A7C15ULL));
    PseudoInputs in{sample_pseudo_label(example, rng), {}};
    if (mode != PromptMode::pseudo_fewshot) return in;

    std::vector<const core::TaskExample*> candidates;
    for (const auto& other : pool) {
        if (other.task() == example.task() && other.id() != example.id()) candidates.push_back(&other);
    }
    if (candidates.size() < kPseudoDemoCount) {
        throw Error(ErrorKind::tiny_task, "task \"" + example.task() + "\" has too few examples for 3 demonstrations");
    }
    for (auto idx : rng.sample_indices(candidates.size(), kPseudoDemoCount)) {
        const auto& demo = *candidates[idx];
        in.demos.push_back(PseudoDemo{demo, sample_pseudo_label(demo, rng)});
    }
    return in;
}

ParsedQuery parse_query_block(std::string_view block) {
    const auto lines = split_lines(block);
    std::size_t header = lines.size();
    for (std::size_t i = lines.size(); i-- > 0;) {
        if (core::trim(lines[i]) == kOptionsHeader) {
            header = i;
            break;
        }
    }
    if (header == lines.size()) {
        throw Error(ErrorKind::malformed_record, "query block has no \"Options:\" line");
    }
    ParsedQuery parsed;
    for (std::size_t i = 0; i < header; ++i) {
        if (i) parsed.question += '\n';
        parsed.question += lines[i];
    }
    for (std::size_t i = header + 1; i < lines.size(); ++i) {
        const auto line = lines[i];
        const char expected = core::label_for(parsed.options.size());
        if (line.size() < 4 || line[0] != '(' || line[1] != expected || line[2] != ')' || line[3] != ' ') break;
        parsed.options.push_back(core::Option{expected, core::trim(line.substr(4))});
    }
    return parsed;
}

ParsedQuery parse_final_query(std::string_view prompt) {
    auto pos = prompt.rfind("\nOptions:\n");
    if (pos == std::string_view::npos) {
        throw Error(ErrorKind::malformed_record, "prompt has no options block");
    }
    auto start = prompt.rfind("\n\n", pos);
    start = start == std::string_view::npos ? 0 : start + 2;
    auto rest = prompt.substr(start);
    if (rest.substr(0, 3) == "Q: ") rest.remove_prefix(3);
    return parse_query_block(rest);
}

std::string answer_reference(std::string_view answer, std::string_view key_block) {
    std::vector<core::Option> options;
    try {
        options = parse_query_block(key_block).options;
    } catch (const Error&) {
        return core::trim(answer);
    }
    if (auto label = first_label_mention(answer, options)) return core::label_token(*label);

    const auto norm_answer = grader::normalize(answer);
    std::optional<char> best;
    std::size_t best_len = 0;
    for (const auto& opt : options) {
        const auto content = grader::normalize(opt.content);
        if (content.empty() || norm_answer.find(content) == std::string::npos) continue;
        if (content.size() > best_len) {
            best = opt.label;
            best_len = content.size();
        }
    }
    if (best) return core::label_token(*best);
    return core::trim(answer);
}

std::string render_for(const core::TaskExample& example, const memory::Store* store,
                       const embed::EmbeddingProvider& embedder, const AnswerOptions& options) {
    PromptRequest req;
    req.mode = options.mode;
    req.preamble = options.preamble;

    if (uses_retrieval(options.mode)) {
        if (!store) throw Error(ErrorKind::invalid_argument, "retrieval mode needs a store");
        if (store->polarity() != store_polarity(options.mode)) {
            throw Error(ErrorKind::polarity_mismatch, std::string(to_string(options.mode)) + " reads a " +
                                                          std::string(to_string(store_polarity(options.mode))) +
                                                          " store, got " + std::string(to_string(store->polarity())));
        }
        req.context = store->retrieve(embedder, query_block(example), options.k, options.theta);
        if (req.context.empty() && options.mode != PromptMode::salam) {
            req.mode = PromptMode::zero_shot;
        }
        if (options.mode == PromptMode::salam) req.guidelines = collect_guidelines(req.context);
    } else if (is_pseudo(options.mode)) {
        if (!options.pseudo) {
            throw Error(ErrorKind::missing_pseudo_label,
                        std::string(to_string(options.mode)) + " needs pseudo-mistake inputs");
        }
        req.pseudo_wrong = options.pseudo->wrong_label;
        req.demos = options.pseudo->demos;
    }
    return build_prompt(example, req);
}

core::Attempt answer(const core::TaskExample& example, const memory::Store* store,
                     const embed::EmbeddingProvider& embedder, backends::TextBackend& backend,
                     const AnswerOptions& options) {
    const auto prompt = render_for(example, store, embedder, options);
    auto response = backend.complete(prompt, options.gen);
    const bool passed = grader::grade(response, example).passed;
    return core::Attempt{example.id(), std::move(response), passed, 0};
}

}  // namespace salam::student
