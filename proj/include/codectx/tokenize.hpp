#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace codectx {

// One tokenizer for the whole pipeline: identifier-ish runs ([A-Za-z0-9_$],
// plus non-ASCII bytes) are single tokens, every other printable character is
// its own token, whitespace separates. Budget accounting, encoder hashing and
// "longest neighbor" selection all count the same units.
inline bool is_word_char(unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
           c == '_' || c == '$' || c >= 0x80;
}

inline bool is_space_char(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::vector<std::string_view> tokenize(std::string_view text) {
    std::vector<std::string_view> out;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_char(c)) {
            ++i;
            continue;
        }
        if (is_word_char(c)) {
            std::size_t j = i + 1;
            while (j < text.size() && is_word_char(static_cast<unsigned char>(text[j]))) ++j;
            out.push_back(text.substr(i, j - i));
            i = j;
        } else {
            out.push_back(text.substr(i, 1));
            ++i;
        }
    }
    return out;
}

inline std::size_t token_count(std::string_view text) {
    std::size_t n = 0;
    std::size_t i = 0;
    while (i < text.size()) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (is_space_char(c)) {
            ++i;
        } else if (is_word_char(c)) {
            ++n;
            while (i < text.size() && is_word_char(static_cast<unsigned char>(text[i]))) ++i;
        } else {
            ++n;
            ++i;
        }
    }
    return n;
}

} // namespace codectx
