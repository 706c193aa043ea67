#include "salam/grader.hpp"

#include <cctype>

namespace salam::grader {

namespace {

bool is_word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0;
}

char lower(char c) {
    return static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
}

}  // namespace

std::string normalize(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    bool pending_space = false;
    for (char c : text) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            pending_space = !out.empty();
            continue;
        }
        if (pending_space) out.push_back(' ');
        pending_space = false;
        out.push_back(lower(c));
    }
    std::size_t b = 0, e = out.size();
    auto strip = [](char c) {
        return std::ispunct(static_cast<unsigned char>(c)) || c == ' ';
    };
    while (b < e && strip(out[b])) ++b;
    while (e > b && strip(out[e - 1])) --e;
    return out.substr(b, e - b);
}

bool contains_label_token(std::string_view text, char label) {
    const char want = lower(label);
    for (std::size_t i = 0; i + 2 < text.size(); ++i) {
        if (text[i] != '(' || text[i + 2] != ')' || lower(text[i + 1]) != want) continue;
        bool left_ok = i == 0 || !is_word_char(text[i - 1]);
        bool right_ok = i + 3 >= text.size() || !is_word_char(text[i + 3]);
        if (left_ok && right_ok) return true;
    }
    return false;
}

GradeResult grade(std::string_view response, const core::TaskExample& example) {
    if (contains_label_token(response, example.answer_label())) {
        return {true, MatchedBy::label};
    }
    const auto content = normalize(example.answer_content());
    if (!content.empty() && normalize(response).find(content) != std::string::npos) {
        return {true, MatchedBy::content};
    }
    return {false, MatchedBy::none};
}

int reward(std::string_view response, const core::TaskExample& example) {
    return grade(response, example).passed ? 1 : 0;
}

}  // namespace salam::grader
