#ifndef PERSPECTRA_PERSPECTIVE_HPP
#define PERSPECTRA_PERSPECTIVE_HPP

#include <array>
#include <optional>
#include <string>
#include <string_view>

#include "perspectra/error.hpp"

namespace perspectra {

// The five answer viewpoint categories. The order here is load-bearing: it
// fixes the BIO class layout and every deterministic tie-break in the kit.
enum class Perspective {
    Information = 0,
    Cause = 1,
    Suggestion = 2,
    Experience = 3,
    Question = 4,
};

inline constexpr std::size_t kNumPerspectives = 5;

inline constexpr std::array<Perspective, kNumPerspectives> kAllPerspectives = {
    Perspective::Information, Perspective::Cause,      Perspective::Suggestion,
    Perspective::Experience,  Perspective::Question,
};

inline std::string_view to_string(Perspective p) {
    switch (p) {
        case Perspective::Information: return "Information";
        case Perspective::Cause: return "Cause";
        case Perspective::Suggestion: return "Suggestion";
        case Perspective::Experience: return "Experience";
        case Perspective::Question: return "Question";
    }
    return "Information";
}

inline std::optional<Perspective> try_parse_perspective(std::string_view s) {
    for (Perspective p : kAllPerspectives)
        if (s == to_string(p)) return p;
    return std::nullopt;
}

inline Perspective parse_perspective(std::string_view s) {
    if (auto p = try_parse_perspective(s)) return *p;
    throw ValidationError("unknown perspective label: '" + std::string(s) + "'");
}

}  // namespace perspectra

#endif
