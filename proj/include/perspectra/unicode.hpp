#ifndef PERSPECTRA_UNICODE_HPP
#define PERSPECTRA_UNICODE_HPP

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

// Minimal UTF-8 walking. All character offsets in the kit are counted in
// Unicode scalar values, so spans and tokens line up across implementations
// regardless of the byte encoding. Ill-formed bytes are decoded permissively
// as one scalar per byte.

namespace perspectra {

struct Utf8Char {
    char32_t cp = 0;
    std::size_t byte_begin = 0;
    std::size_t byte_end = 0;  // exclusive
};

// Decodes the code point starting at byte offset `pos`. pos must be < text.size().
inline Utf8Char utf8_decode_at(std::string_view text, std::size_t pos) {
    const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(text[i]); };
    const unsigned char b0 = byte(pos);
    std::size_t len = 1;
    char32_t cp = b0;
    if (b0 < 0x80) {
        len = 1;
    } else if ((b0 & 0xE0) == 0xC0) {
        len = 2;
        cp = b0 & 0x1F;
    } else if ((b0 & 0xF0) == 0xE0) {
        len = 3;
        cp = b0 & 0x0F;
    } else if ((b0 & 0xF8) == 0xF0) {
        len = 4;
        cp = b0 & 0x07;
    } else {
        return {b0, pos, pos + 1};  // stray continuation byte
    }
    if (pos + len > text.size()) return {b0, pos, pos + 1};
    for (std::size_t i = 1; i < len; ++i) {
        const unsigned char bi = byte(pos + i);
        if ((bi & 0xC0) != 0x80) return {b0, pos, pos + 1};
        cp = (cp << 6) | (bi & 0x3F);
    }
    return {cp, pos, pos + len};
}

// Calls fn(Utf8Char, scalar_index) for every scalar in order.
template <typename Fn>
void utf8_for_each(std::string_view text, Fn&& fn) {
    std::size_t pos = 0;
    std::size_t idx = 0;
    while (pos < text.size()) {
        Utf8Char c = utf8_decode_at(text, pos);
        fn(c, idx);
        pos = c.byte_end;
        ++idx;
    }
}

inline std::size_t utf8_length(std::string_view text) {
    std::size_t n = 0;
    utf8_for_each(text, [&](const Utf8Char&, std::size_t) { ++n; });
    return n;
}

// Substring by scalar offsets, half-open [start, end).
inline std::string utf8_slice(std::string_view text, std::size_t start, std::size_t end) {
    std::size_t byte_begin = text.size();
    std::size_t byte_end = text.size();
    utf8_for_each(text, [&](const Utf8Char& c, std::size_t idx) {
        if (idx == start) byte_begin = c.byte_begin;
        if (idx == end) byte_end = c.byte_begin;
    });
    if (start >= end || byte_begin >= text.size()) return {};
    return std::string(text.substr(byte_begin, byte_end - byte_begin));
}

}  // namespace perspectra

#endif
