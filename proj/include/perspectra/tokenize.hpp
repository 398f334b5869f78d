#ifndef PERSPECTRA_TOKENIZE_HPP
#define PERSPECTRA_TOKENIZE_HPP

#include <string>
#include <string_view>
#include <vector>

#include "perspectra/unicode.hpp"

namespace perspectra {

// One word token over an answer text. Offsets are scalar-value offsets,
// half-open [start, end); text equals the covered substring.
struct Token {
    std::string text;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const Token&) const = default;
};

using TokenSeq = std::vector<Token>;

namespace detail {

inline bool is_space_cp(char32_t cp) {
    switch (cp) {
        case U' ': case U'\t': case U'\n': case U'\r': case U'\f': case U'\v':
        case 0x00A0: case 0x2028: case 0x2029: case 0x3000:
            return true;
        default:
            return cp >= 0x2000 && cp <= 0x200A;
    }
}

inline bool is_punct_cp(char32_t cp) {
    return (cp >= U'!' && cp <= U'/') || (cp >= U':' && cp <= U'@') ||
           (cp >= U'[' && cp <= U'`') || (cp >= U'{' && cp <= U'~');
}

}  // namespace detail

// The kit's reference word tokenizer: splits on whitespace and emits each
// ASCII punctuation character as its own token. Every module that needs a
// shared token grid (ensembling, token-level F1, metric tokenization,
// per-token embeddings) goes through this.
inline TokenSeq tokenize_words(std::string_view text) {
    TokenSeq tokens;
    std::string cur;
    std::size_t cur_start = 0;
    auto flush = [&](std::size_t end_idx) {
        if (!cur.empty()) {
            tokens.push_back(Token{cur, cur_start, end_idx});
            cur.clear();
        }
    };
    utf8_for_each(text, [&](const Utf8Char& c, std::size_t idx) {
        if (detail::is_space_cp(c.cp)) {
            flush(idx);
        } else if (detail::is_punct_cp(c.cp)) {
            flush(idx);
            tokens.push_back(Token{std::string(text.substr(c.byte_begin, c.byte_end - c.byte_begin)),
                                   idx, idx + 1});
        } else {
            if (cur.empty()) cur_start = idx;
            cur.append(text.substr(c.byte_begin, c.byte_end - c.byte_begin));
        }
    });
    flush(utf8_length(text));
    return tokens;
}

}  // namespace perspectra

#endif
