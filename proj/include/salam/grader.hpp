#pragma once

#include <string>
#include <string_view>

#include "salam/core.hpp"

namespace salam::grader {

enum class MatchedBy { label, content, none };

struct GradeResult {
    bool passed = false;
    MatchedBy matched_by = MatchedBy::none;
};

// Lowercase, collapse whitespace runs to one space, strip leading and
// trailing punctuation and whitespace.
std::string normalize(std::string_view text);

// True when `text` contains "(x)" for `label` with no letter or digit directly
// on either side. Case-insensitive.
bool contains_label_token(std::string_view text, char label);

// f(y, r): passes when the response names the gold label "(X)" or contains
// the gold option content. Total; never throws.
GradeResult grade(std::string_view response, const core::TaskExample& example);

// R(s, a) in {0, 1}.
int reward(std::string_view response, const core::TaskExample& example);

}  // namespace salam::grader
