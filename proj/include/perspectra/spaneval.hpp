#ifndef PERSPECTRA_SPANEVAL_HPP
#define PERSPECTRA_SPANEVAL_HPP

#include <algorithm>
#include <array>
#include <cstddef>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include <nlohmann/json.hpp>

#include "perspectra/corpus.hpp"
#include "perspectra/error.hpp"
#include "perspectra/perspective.hpp"
#include "perspectra/prf.hpp"
#include "perspectra/tokenize.hpp"

// Span identification scoring in three modes:
//   - token-level macro F1 over the five perspective classes,
//   - strict span matching (exact boundaries and label, one credit per gold),
//   - proportional span matching (max character-overlap credit per span).
// Macro averages run over classes present in gold or pred; classes absent
// from both are excluded rather than counted as vacuous 1.0s.

namespace perspectra {

struct PerClassScore {
    Prf token;
    Prf strict;
    Prf proportional;
};

struct SpanScore {
    double macro_f1 = 0.0;
    double strict_f1 = 0.0;
    double proportional_f1 = 0.0;
    std::map<Perspective, PerClassScore> per_class;
};

// Accumulates match counts across threads so corpus-level scores pool
// evidence instead of averaging per-thread scores.
class SpanScorer {
public:
    // `tokens` holds one TokenSeq per answer of the instance's thread.
    void add_instance(const std::vector<PerspectiveSpan>& pred,
                      const std::vector<PerspectiveSpan>& gold,
                      const std::vector<TokenSeq>& tokens) {
        add_token_counts(pred, gold, tokens);
        add_strict_counts(pred, gold);
        add_proportional_counts(pred, gold);
    }

    // Strict and proportional modes never look at tokens.
    void add_instance(const std::vector<PerspectiveSpan>& pred,
                      const std::vector<PerspectiveSpan>& gold) {
        add_strict_counts(pred, gold);
        add_proportional_counts(pred, gold);
    }

    SpanScore finalize() const {
        SpanScore score;
        double token_sum = 0.0, strict_sum = 0.0, prop_sum = 0.0;
        std::size_t token_classes = 0, span_classes = 0;
        for (Perspective p : kAllPerspectives) {
            const ClassCounts& c = counts_[static_cast<std::size_t>(p)];
            PerClassScore pc;
            pc.token = prf_from_counts(static_cast<double>(c.token_tp),
                                       static_cast<double>(c.token_pred),
                                       static_cast<double>(c.token_gold));
            pc.strict = prf_from_counts(static_cast<double>(c.strict_tp),
                                        static_cast<double>(c.span_pred),
                                        static_cast<double>(c.span_gold));
            const double pp = c.span_pred > 0 ? c.prop_precision_sum / static_cast<double>(c.span_pred) : 0.0;
            const double pr = c.span_gold > 0 ? c.prop_recall_sum / static_cast<double>(c.span_gold) : 0.0;
            pc.proportional = make_prf(pp, pr);
            score.per_class[p] = pc;

            if (c.token_pred > 0 || c.token_gold > 0) {
                token_sum += pc.token.f1;
                ++token_classes;
            }
            if (c.span_pred > 0 || c.span_gold > 0) {
                strict_sum += pc.strict.f1;
                prop_sum += pc.proportional.f1;
                ++span_classes;
            }
        }
        if (token_classes > 0) score.macro_f1 = token_sum / static_cast<double>(token_classes);
        if (span_classes > 0) {
            score.strict_f1 = strict_sum / static_cast<double>(span_classes);
            score.proportional_f1 = prop_sum / static_cast<double>(span_classes);
        }
        return score;
    }

private:
    struct ClassCounts {
        std::size_t token_tp = 0, token_pred = 0, token_gold = 0;
        std::size_t strict_tp = 0, span_pred = 0, span_gold = 0;
        double prop_precision_sum = 0.0, prop_recall_sum = 0.0;
    };

    static void covered_tokens(const std::vector<PerspectiveSpan>& spans,
                               const std::vector<TokenSeq>& tokens,
                               std::array<std::set<std::pair<int, std::size_t>>, kNumPerspectives>& out) {
        for (const auto& span : spans) {
            if (span.answer_index < 0 || span.answer_index >= static_cast<int>(tokens.size()))
                throw ValidationError("span scorer: span answer_index " +
                                      std::to_string(span.answer_index) + " has no token sequence");
            const TokenSeq& seq = tokens[static_cast<std::size_t>(span.answer_index)];
            auto& bucket = out[static_cast<std::size_t>(span.label)];
            for (std::size_t i = 0; i < seq.size(); ++i)
                if (seq[i].start < span.end && span.start < seq[i].end)
                    bucket.insert({span.answer_index, i});
        }
    }

    void add_token_counts(const std::vector<PerspectiveSpan>& pred,
                          const std::vector<PerspectiveSpan>& gold,
                          const std::vector<TokenSeq>& tokens) {
        std::array<std::set<std::pair<int, std::size_t>>, kNumPerspectives> pred_tokens, gold_tokens;
        covered_tokens(pred, tokens, pred_tokens);
        covered_tokens(gold, tokens, gold_tokens);
        for (std::size_t c = 0; c < kNumPerspectives; ++c) {
            ClassCounts& cc = counts_[c];
            cc.token_pred += pred_tokens[c].size();
            cc.token_gold += gold_tokens[c].size();
            for (const auto& key : pred_tokens[c])
                if (gold_tokens[c].count(key)) ++cc.token_tp;
        }
    }

    void add_strict_counts(const std::vector<PerspectiveSpan>& pred,
                           const std::vector<PerspectiveSpan>& gold) {
        using Key = std::tuple<int, std::size_t, std::size_t>;
        std::array<std::map<Key, std::size_t>, kNumPerspectives> gold_multiset;
        for (const auto& g : gold)
            ++gold_multiset[static_cast<std::size_t>(g.label)][{g.answer_index, g.start, g.end}];
        for (const auto& g : gold) ++counts_[static_cast<std::size_t>(g.label)].span_gold;
        for (const auto& p : pred) {
            ClassCounts& cc = counts_[static_cast<std::size_t>(p.label)];
            ++cc.span_pred;
            auto& bucket = gold_multiset[static_cast<std::size_t>(p.label)];
            auto it = bucket.find({p.answer_index, p.start, p.end});
            if (it != bucket.end() && it->second > 0) {
                --it->second;  // each gold span is matchable at most once
                ++cc.strict_tp;
            }
        }
    }

    static double overlap_chars(const PerspectiveSpan& a, const PerspectiveSpan& b) {
        if (a.answer_index != b.answer_index) return 0.0;
        const std::size_t lo = std::max(a.start, b.start);
        const std::size_t hi = std::min(a.end, b.end);
        return hi > lo ? static_cast<double>(hi - lo) : 0.0;
    }

    void add_proportional_counts(const std::vector<PerspectiveSpan>& pred,
                                 const std::vector<PerspectiveSpan>& gold) {
        for (const auto& p : pred) {
            double best = 0.0;
            for (const auto& g : gold)
                if (g.label == p.label) best = std::max(best, overlap_chars(p, g));
            counts_[static_cast<std::size_t>(p.label)].prop_precision_sum +=
                best / static_cast<double>(p.length());
        }
        for (const auto& g : gold) {
            double best = 0.0;
            for (const auto& p : pred)
                if (p.label == g.label) best = std::max(best, overlap_chars(p, g));
            counts_[static_cast<std::size_t>(g.label)].prop_recall_sum +=
                best / static_cast<double>(g.length());
        }
    }

    std::array<ClassCounts, kNumPerspectives> counts_{};
};

inline double macro_f1(const std::vector<PerspectiveSpan>& pred,
                       const std::vector<PerspectiveSpan>& gold,
                       const std::vector<TokenSeq>& tokens) {
    SpanScorer scorer;
    scorer.add_instance(pred, gold, tokens);
    return scorer.finalize().macro_f1;
}

inline double strict_match_f1(const std::vector<PerspectiveSpan>& pred,
                              const std::vector<PerspectiveSpan>& gold) {
    SpanScorer scorer;
    scorer.add_instance(pred, gold);
    return scorer.finalize().strict_f1;
}

inline double proportional_match_f1(const std::vector<PerspectiveSpan>& pred,
                                    const std::vector<PerspectiveSpan>& gold) {
    SpanScorer scorer;
    scorer.add_instance(pred, gold);
    return scorer.finalize().proportional_f1;
}

inline nlohmann::ordered_json span_score_to_json(const SpanScore& score, bool with_macro = true) {
    nlohmann::ordered_json j;
    if (with_macro) j["macro_f1"] = score.macro_f1;
    j["strict_f1"] = score.strict_f1;
    j["proportional_f1"] = score.proportional_f1;
    auto prf_json = [](const Prf& p) {
        return nlohmann::ordered_json{
            {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
    };
    auto per_class = nlohmann::ordered_json::object();
    for (const auto& [p, pc] : score.per_class) {
        per_class[std::string(to_string(p))] = {{"token", prf_json(pc.token)},
                                                {"strict", prf_json(pc.strict)},
                                                {"proportional", prf_json(pc.proportional)}};
    }
    j["per_class"] = std::move(per_class);
    j["macro_average_note"] =
        "macro averages exclude classes absent from both prediction and gold";
    return j;
}

}  // namespace perspectra

#endif
