#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "salam/backends.hpp"
#include "salam/core.hpp"
#include "salam/embed.hpp"
#include "salam/memory.hpp"

namespace salam::student {

enum class PromptMode { zero_shot, fewshot_correct, fewshot_mistake, salam, pseudo_zero, pseudo_fewshot };

inline constexpr std::array<PromptMode, 6> kAllModes{
    PromptMode::zero_shot,   PromptMode::fewshot_correct, PromptMode::fewshot_mistake,
    PromptMode::salam,       PromptMode::pseudo_zero,     PromptMode::pseudo_fewshot,
};

std::string_view to_string(PromptMode mode);
PromptMode parse_mode(std::string_view name);

bool uses_retrieval(PromptMode mode);
bool is_pseudo(PromptMode mode);
// Store polarity a retrieval mode reads from.
memory::Polarity store_polarity(PromptMode mode);

// The question followed by its "Options:" block; also the store key.
std::string query_block(const core::TaskExample& example);

struct PseudoDemo {
    core::TaskExample example;
    char wrong_label;
};

inline constexpr std::size_t kPseudoDemoCount = 3;

struct PromptRequest {
    PromptMode mode = PromptMode::zero_shot;
    std::vector<core::ContextItem> context;
    // salam only; rendered in order, already deduplicated.
    std::vector<std::string> guidelines;
    std::optional<char> pseudo_wrong;
    std::vector<PseudoDemo> demos;
    // Optional task instruction line opening a pseudo_fewshot prompt.
    std::optional<std::string> preamble;
};

// Renders the prompt for `example`. Few-shot modes need a non-empty context;
// salam with no context renders the query followed by "The correct answer is".
std::string build_prompt(const core::TaskExample& example, const PromptRequest& request);

// Cached guidelines of the retrieved items, first occurrence kept, in
// similarity order.
std::vector<std::string> collect_guidelines(std::span<const core::ContextItem> context);

// Uniform over the non-gold labels.
char sample_pseudo_label(const core::TaskExample& example, core::Rng& rng);

struct PseudoInputs {
    char wrong_label;
    std::vector<PseudoDemo> demos;
};

// Per-example draw seeded from (seed, example id), so results do not depend
// on evaluation order. pseudo_fewshot demos are other examples of the same
// task from `pool`.
PseudoInputs make_pseudo_inputs(const core::TaskExample& example, std::span<const core::TaskExample> pool,
                                PromptMode mode, std::uint64_t seed);

struct ParsedQuery {
    std::string question;
    std::vector<core::Option> options;
};

// Recovers the question and options of a rendered query block.
ParsedQuery parse_query_block(std::string_view block);

// Template linter: locates the final query of a rendered prompt and parses it.
ParsedQuery parse_final_query(std::string_view prompt);

// Renders an answer as "(X)" when it names an option of the query in
// `key_block`; otherwise returns the trimmed answer.
std::string answer_reference(std::string_view answer, std::string_view key_block);

struct AnswerOptions {
    PromptMode mode = PromptMode::zero_shot;
    std::size_t k = 3;
    double theta = 0.9;
    backends::GenParams gen{};
    std::optional<PseudoInputs> pseudo;
    std::optional<std::string> preamble;
};

// Retrieves context when the mode needs it, renders, generates and grades.
// Few-shot modes whose retrieval comes back empty fall back to the zero-shot
// prompt.
core::Attempt answer(const core::TaskExample& example, const memory::Store* store,
                     const embed::EmbeddingProvider& embedder, backends::TextBackend& backend,
                     const AnswerOptions& options);

// The prompt answer() would send, without calling a backend.
std::string render_for(const core::TaskExample& example, const memory::Store* store,
                       const embed::EmbeddingProvider& embedder, const AnswerOptions& options);

}  // namespace salam::student
