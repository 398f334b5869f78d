#ifndef PERSPECTRA_SPANID_HPP
#define PERSPECTRA_SPANID_HPP

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "perspectra/corpus.hpp"
#include "perspectra/error.hpp"
#include "perspectra/perspective.hpp"
#include "perspectra/tokenize.hpp"

// Perspective span identification: ensemble averaging of per-token class
// probabilities over a shared word-token grid, then BIO decoding.
//
// Class layout (C = 11): B-X at 2*X, I-X at 2*X + 1 for each perspective X
// in enum order, and O last at index 10. Argmax ties resolve to the lowest
// class index, so O loses every tie.

namespace perspectra {

inline constexpr std::size_t kNumBioClasses = 2 * kNumPerspectives + 1;
inline constexpr std::size_t kOutsideClass = kNumBioClasses - 1;

inline std::size_t bio_begin_class(Perspective p) { return 2 * static_cast<std::size_t>(p); }
inline std::size_t bio_inside_class(Perspective p) { return 2 * static_cast<std::size_t>(p) + 1; }
inline bool is_begin_class(std::size_t c) { return c < kOutsideClass && c % 2 == 0; }
inline bool is_inside_class(std::size_t c) { return c < kOutsideClass && c % 2 == 1; }
inline Perspective class_perspective(std::size_t c) { return static_cast<Perspective>(c / 2); }

inline std::string bio_class_name(std::size_t c) {
    if (c == kOutsideClass) return "O";
    return std::string(is_begin_class(c) ? "B-" : "I-") +
           std::string(to_string(class_perspective(c)));
}

inline std::size_t parse_bio_class(std::string_view name) {
    if (name == "O") return kOutsideClass;
    if (name.size() > 2 && name[1] == '-') {
        auto p = try_parse_perspective(name.substr(2));
        if (p && name[0] == 'B') return bio_begin_class(*p);
        if (p && name[0] == 'I') return bio_inside_class(*p);
    }
    throw ValidationError("unknown BIO tag: '" + std::string(name) + "'");
}

using ProbRows = std::vector<std::vector<double>>;

// Per-token class probabilities for one answer from one classifier provider.
struct ProbMatrix {
    std::string provider_id;
    ProbRows rows;
};

struct EnsembleOutput {
    ProbRows rows;
};

inline void validate_prob_rows(const ProbRows& rows, std::string_view who,
                               double row_sum_tol = 1e-6) {
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != kNumBioClasses)
            throw ValidationError(std::string(who) + ": row " + std::to_string(i) + " has " +
                                  std::to_string(rows[i].size()) + " classes, expected " +
                                  std::to_string(kNumBioClasses));
        double sum = 0.0;
        for (double v : rows[i]) {
            if (!(v >= 0.0 && v <= 1.0))
                throw ValidationError(std::string(who) + ": row " + std::to_string(i) +
                                      " has entry outside [0, 1]");
            sum += v;
        }
        if (std::abs(sum - 1.0) > row_sum_tol)
            throw ValidationError(std::string(who) + ": row " + std::to_string(i) +
                                  " sums to " + std::to_string(sum) + ", expected 1");
    }
}

// Elementwise arithmetic mean over ensemble members. All members must share
// one token grid and class count.
inline EnsembleOutput average_probabilities(const std::vector<ProbMatrix>& members) {
    if (members.empty()) throw ValidationError("average_probabilities: empty member list");
    const std::size_t rows = members.front().rows.size();
    const std::size_t cols = rows == 0 ? kNumBioClasses : members.front().rows.front().size();
    for (const auto& m : members) {
        bool ok = m.rows.size() == rows;
        for (const auto& r : m.rows) ok = ok && r.size() == cols;
        if (!ok) {
            std::string ids;
            for (const auto& mm : members) ids += (ids.empty() ? "" : ", ") + mm.provider_id;
            throw ValidationError("average_probabilities: shape mismatch across providers [" +
                                  ids + "]");
        }
    }
    EnsembleOutput out;
    out.rows.assign(rows, std::vector<double>(cols, 0.0));
    const double k = static_cast<double>(members.size());
    for (const auto& m : members)
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t j = 0; j < cols; ++j) out.rows[i][j] += m.rows[i][j] / k;
    return out;
}

// Lowest class index wins ties; O sits at the highest index by construction.
inline std::size_t argmax_class(const std::vector<double>& row) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < row.size(); ++j)
        if (row[j] > row[best]) best = j;
    return best;
}

// I-X without a same-X head is promoted to B-X instead of being dropped.
inline std::vector<std::size_t> repair_bio_tags(std::vector<std::size_t> tags) {
    for (std::size_t i = 0; i < tags.size(); ++i) {
        if (!is_inside_class(tags[i])) continue;
        const Perspective p = class_perspective(tags[i]);
        const bool headed = i > 0 && tags[i - 1] != kOutsideClass &&
                            class_perspective(tags[i - 1]) == p;
        if (!headed) tags[i] = bio_begin_class(p);
    }
    return tags;
}

// Groups a repaired tag sequence into spans. Character offsets run from the
// first token's start to the last token's end; the covered substring is taken
// from the answer text.
inline std::vector<PerspectiveSpan> spans_from_tags(const std::vector<std::size_t>& raw_tags,
                                                    const TokenSeq& tokens,
                                                    std::string_view answer,
                                                    int answer_index) {
    if (raw_tags.size() != tokens.size())
        throw ValidationError("spans_from_tags: " + std::to_string(raw_tags.size()) +
                              " tags for " + std::to_string(tokens.size()) + " tokens");
    const std::vector<std::size_t> tags = repair_bio_tags(raw_tags);
    std::vector<PerspectiveSpan> spans;
    std::size_t i = 0;
    while (i < tags.size()) {
        if (tags[i] == kOutsideClass) {
            ++i;
            continue;
        }
        const Perspective p = class_perspective(tags[i]);
        std::size_t j = i + 1;
        while (j < tags.size() && is_inside_class(tags[j]) && class_perspective(tags[j]) == p) ++j;
        PerspectiveSpan span;
        span.answer_index = answer_index;
        span.start = tokens[i].start;
        span.end = tokens[j - 1].end;
        span.label = p;
        span.text = utf8_slice(answer, span.start, span.end);
        spans.push_back(std::move(span));
        i = j;
    }
    return spans;
}

inline std::vector<PerspectiveSpan> decode_spans(const EnsembleOutput& probs,
                                                 const TokenSeq& tokens,
                                                 std::string_view answer,
                                                 int answer_index) {
    if (probs.rows.size() != tokens.size())
        throw ValidationError("decode_spans: " + std::to_string(probs.rows.size()) +
                              " probability rows for " + std::to_string(tokens.size()) +
                              " tokens");
    std::vector<std::size_t> tags;
    tags.reserve(probs.rows.size());
    for (const auto& row : probs.rows) tags.push_back(argmax_class(row));
    return spans_from_tags(tags, tokens, answer, answer_index);
}

// Inverse of decoding: marks B at the first token a span covers and I on the
// rest. A token counts as covered when its interval overlaps the span's.
inline std::vector<std::size_t> encode_bio_tags(const std::vector<PerspectiveSpan>& spans,
                                                const TokenSeq& tokens) {
    std::vector<std::size_t> tags(tokens.size(), kOutsideClass);
    for (const auto& span : spans) {
        bool first = true;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            const bool covered = tokens[i].start < span.end && span.start < tokens[i].end;
            if (!covered) continue;
            tags[i] = first ? bio_begin_class(span.label) : bio_inside_class(span.label);
            first = false;
        }
    }
    return tags;
}

}  // namespace perspectra

#endif
