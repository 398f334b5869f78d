#ifndef PERSPECTRA_SUMMEVAL_HPP
#define PERSPECTRA_SUMMEVAL_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "perspectra/embedding.hpp"
#include "perspectra/error.hpp"
#include "perspectra/prf.hpp"
#include "perspectra/stem.hpp"
#include "perspectra/tokenize.hpp"

// Summary relevance metrics and the composite objective. All metrics operate
// on lowercased kit word tokens; inputs are expected to be NFC-normalized
// UTF-8 (the kit does not renormalize).

namespace perspectra {

inline std::string lowercase_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    return out;
}

inline std::vector<std::string> metric_tokens(std::string_view text) {
    std::vector<std::string> out;
    for (const Token& t : tokenize_words(text)) out.push_back(lowercase_ascii(t.text));
    return out;
}

namespace detail {

using NgramCounts = std::map<std::vector<std::string>, std::size_t>;

inline NgramCounts count_ngrams(const std::vector<std::string>& tokens, std::size_t n) {
    NgramCounts counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i)
        ++counts[std::vector<std::string>(tokens.begin() + static_cast<std::ptrdiff_t>(i),
                                          tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
    return counts;
}

inline std::size_t clipped_overlap(const NgramCounts& cand, const NgramCounts& ref) {
    std::size_t overlap = 0;
    for (const auto& [gram, count] : cand) {
        auto it = ref.find(gram);
        if (it != ref.end()) overlap += std::min(count, it->second);
    }
    return overlap;
}

inline std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.empty() || b.empty()) return 0;
    std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
    for (std::size_t i = 1; i <= a.size(); ++i) {
        for (std::size_t j = 1; j <= b.size(); ++j) {
            if (a[i - 1] == b[j - 1])
                cur[j] = prev[j - 1] + 1;
            else
                cur[j] = std::max(prev[j], cur[j - 1]);
        }
        std::swap(prev, cur);
    }
    return prev[b.size()];
}

}  // namespace detail

// Clipped n-gram overlap, n in {1, 2}.
inline Prf rouge_n(std::string_view candidate, std::string_view reference, std::size_t n) {
    if (n != 1 && n != 2) throw ValidationError("rouge_n: n must be 1 or 2");
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    const auto cand_counts = detail::count_ngrams(cand, n);
    const auto ref_counts = detail::count_ngrams(ref, n);
    std::size_t cand_total = 0, ref_total = 0;
    for (const auto& [g, c] : cand_counts) cand_total += c;
    for (const auto& [g, c] : ref_counts) ref_total += c;
    const double overlap = static_cast<double>(detail::clipped_overlap(cand_counts, ref_counts));
    return prf_from_counts(overlap, static_cast<double>(cand_total), static_cast<double>(ref_total));
}

inline Prf rouge_l(std::string_view candidate, std::string_view reference) {
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    const double lcs = static_cast<double>(detail::lcs_length(cand, ref));
    return prf_from_counts(lcs, static_cast<double>(cand.size()), static_cast<double>(ref.size()));
}

// Sentence-level BLEU-4, uniform weights, brevity penalty. Add-one smoothing
// applies only to zero counts at orders 2..4; zero unigram overlap scores 0.
inline double bleu(std::string_view candidate, std::string_view reference) {
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    if (cand.empty()) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        const std::size_t total = cand.size() >= n ? cand.size() - n + 1 : 0;
        const std::size_t overlap = detail::clipped_overlap(detail::count_ngrams(cand, n),
                                                            detail::count_ngrams(ref, n));
        double p;
        if (n == 1) {
            if (overlap == 0) return 0.0;
            p = static_cast<double>(overlap) / static_cast<double>(total);
        } else if (overlap == 0) {
            p = 1.0 / static_cast<double>(total + 1);
        } else {
            p = static_cast<double>(overlap) / static_cast<double>(total);
        }
        log_sum += 0.25 * std::log(p);
    }
    const double c = static_cast<double>(cand.size());
    const double r = static_cast<double>(ref.size());
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / std::max(c, 1.0));
    return std::min(1.0, bp * std::exp(log_sum));
}

// METEOR with exact and Porter-stem alignment stages (no synonym stage).
// Within a stage, tokens pair greedily left to right; chunk minimization is
// the usual leftmost-pairing heuristic.
inline double meteor(std::string_view candidate, std::string_view reference) {
    const auto cand = metric_tokens(candidate);
    const auto ref = metric_tokens(reference);
    if (cand.empty() || ref.empty()) return 0.0;

    std::vector<int> cand_to_ref(cand.size(), -1);
    std::vector<bool> ref_used(ref.size(), false);
    auto align = [&](auto&& key) {
        for (std::size_t i = 0; i < cand.size(); ++i) {
            if (cand_to_ref[i] >= 0) continue;
            for (std::size_t j = 0; j < ref.size(); ++j) {
                if (ref_used[j]) continue;
                if (key(cand[i]) == key(ref[j])) {
                    cand_to_ref[i] = static_cast<int>(j);
                    ref_used[j] = true;
                    break;
                }
            }
        }
    };
    align([](const std::string& w) { return w; });
    align([](const std::string& w) { return porter_stem(w); });

    // A chunk is a maximal run of matches contiguous on both sides.
    std::size_t matches = 0, chunks = 0;
    int prev_cand = -2, prev_ref = -2;
    for (std::size_t i = 0; i < cand.size(); ++i) {
        if (cand_to_ref[i] < 0) continue;
        ++matches;
        const bool contiguous = static_cast<int>(i) == prev_cand + 1 && cand_to_ref[i] == prev_ref + 1;
        if (!contiguous) ++chunks;
        prev_cand = static_cast<int>(i);
        prev_ref = cand_to_ref[i];
    }
    if (matches == 0) return 0.0;

    const double m = static_cast<double>(matches);
    const double precision = m / static_cast<double>(cand.size());
    const double recall = m / static_cast<double>(ref.size());
    const double f_mean = 10.0 * precision * recall / (recall + 9.0 * precision);
    const double frag = static_cast<double>(chunks) / m;
    const double penalty = 0.5 * frag * frag * frag;
    return f_mean * (1.0 - penalty);
}

// Greedy embedding matching: precision is the mean over candidate tokens of
// the best cosine against the reference side, recall the mirror image.
// Similarities clip at 0 so scores stay in [0, 1]; no IDF, no rescaling.
inline Prf bertscore(std::string_view candidate, std::string_view reference,
                     const TokenEmbedder& embedder) {
    if (candidate.empty() || reference.empty())
        throw ValidationError("bertscore: candidate and reference must be non-empty");
    const TokenEmbeddings cand = embedder(lowercase_ascii(candidate));
    const TokenEmbeddings ref = embedder(lowercase_ascii(reference));
    if (cand.vectors.empty() || ref.vectors.empty())
        throw ValidationError("bertscore: embedder returned no vectors");

    auto cosine = [](const std::vector<double>& a, const std::vector<double>& b) {
        double dot = 0.0, na = 0.0, nb = 0.0;
        const std::size_t d = std::min(a.size(), b.size());
        for (std::size_t i = 0; i < d; ++i) {
            dot += a[i] * b[i];
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        if (na <= 0.0 || nb <= 0.0) return 0.0;
        return dot / (std::sqrt(na) * std::sqrt(nb));
    };
    auto side = [&](const TokenEmbeddings& from, const TokenEmbeddings& to) {
        double sum = 0.0;
        for (const auto& v : from.vectors) {
            double best = 0.0;
            for (const auto& w : to.vectors) best = std::max(best, cosine(v, w));
            sum += std::clamp(best, 0.0, 1.0);
        }
        return sum / static_cast<double>(from.vectors.size());
    };
    return make_prf(side(cand, ref), side(ref, cand));
}

// Weights for the composite objective; defaults give each sub-metric 0.25.
struct MetricWeights {
    double rouge_l = 0.25;
    double bleu = 0.25;
    double meteor = 0.25;
    double bertscore = 0.25;

    void validate() const {
        const double sum = rouge_l + bleu + meteor + bertscore;
        if (std::abs(sum - 1.0) > 1e-9)
            throw ValidationError("metric weights must sum to 1, got " + std::to_string(sum));
        if (rouge_l < 0 || bleu < 0 || meteor < 0 || bertscore < 0)
            throw ValidationError("metric weights must be non-negative");
    }
};

struct CompositeInputs {
    std::optional<double> rouge_l;
    std::optional<double> bleu;
    std::optional<double> meteor;
    std::optional<double> bertscore;
};

inline double composite(const CompositeInputs& in, const MetricWeights& w = {}) {
    w.validate();
    auto need = [](const std::optional<double>& v, const char* name) {
        if (!v) throw ValidationError(std::string("composite: missing sub-score ") + name);
        return *v;
    };
    return w.rouge_l * need(in.rouge_l, "rouge_l") + w.bleu * need(in.bleu, "bleu") +
           w.meteor * need(in.meteor, "meteor") + w.bertscore * need(in.bertscore, "bertscore");
}

inline double composite(double rouge_l_f1, double bleu_score, double meteor_score,
                        double bertscore_f1, const MetricWeights& w = {}) {
    return composite(CompositeInputs{rouge_l_f1, bleu_score, meteor_score, bertscore_f1}, w);
}

// All relevance sub-scores plus the composite; factuality fields stay unset
// unless a scorer endpoint contributed them.
struct MetricReport {
    Prf rouge1;
    Prf rouge2;
    Prf rouge_l;
    double bleu = 0.0;
    double meteor = 0.0;
    Prf bertscore;
    std::optional<double> alignscore;
    std::optional<double> summac;
    double composite = 0.0;
};

// Factuality scorer endpoint contract: (candidate, reference) -> scores.
using FactualityScorer =
    std::function<std::pair<std::optional<double>, std::optional<double>>(const std::string&,
                                                                          const std::string&)>;

inline MetricReport evaluate_pair(const std::string& candidate, const std::string& reference,
                                  const TokenEmbedder& embedder,
                                  const MetricWeights& weights = {}) {
    MetricReport rep;
    rep.rouge1 = rouge_n(candidate, reference, 1);
    rep.rouge2 = rouge_n(candidate, reference, 2);
    rep.rouge_l = rouge_l(candidate, reference);
    rep.bleu = bleu(candidate, reference);
    rep.meteor = meteor(candidate, reference);
    const bool scorable = !metric_tokens(candidate).empty() && !metric_tokens(reference).empty();
    rep.bertscore = scorable ? bertscore(candidate, reference, embedder) : Prf{};
    rep.composite = composite(rep.rouge_l.f1, rep.bleu, rep.meteor, rep.bertscore.f1, weights);
    return rep;
}

struct BatchReport {
    std::vector<MetricReport> reports;
    MetricReport means;
    double corpus_bleu = 0.0;
    bool factuality_warning = false;
};

// Corpus-level BLEU pools n-gram and length statistics over all pairs.
inline double corpus_bleu(const std::vector<std::pair<std::string, std::string>>& pairs) {
    std::array<std::size_t, 4> overlaps{}, totals{};
    std::size_t cand_len = 0, ref_len = 0;
    for (const auto& [c, r] : pairs) {
        const auto cand = metric_tokens(c);
        const auto ref = metric_tokens(r);
        cand_len += cand.size();
        ref_len += ref.size();
        for (std::size_t n = 1; n <= 4; ++n) {
            totals[n - 1] += cand.size() >= n ? cand.size() - n + 1 : 0;
            overlaps[n - 1] += detail::clipped_overlap(detail::count_ngrams(cand, n),
                                                       detail::count_ngrams(ref, n));
        }
    }
    if (cand_len == 0) return 0.0;
    double log_sum = 0.0;
    for (std::size_t n = 1; n <= 4; ++n) {
        double p;
        if (n == 1) {
            if (overlaps[0] == 0) return 0.0;
            p = static_cast<double>(overlaps[0]) / static_cast<double>(totals[0]);
        } else if (overlaps[n - 1] == 0) {
            p = 1.0 / static_cast<double>(totals[n - 1] + 1);
        } else {
            p = static_cast<double>(overlaps[n - 1]) / static_cast<double>(totals[n - 1]);
        }
        log_sum += 0.25 * std::log(p);
    }
    const double c = static_cast<double>(cand_len);
    const double r = static_cast<double>(ref_len);
    const double bp = c > r ? 1.0 : std::exp(1.0 - r / c);
    return std::min(1.0, bp * std::exp(log_sum));
}

inline BatchReport evaluate_batch(const std::vector<std::pair<std::string, std::string>>& pairs,
                                  const TokenEmbedder& embedder,
                                  const FactualityScorer& factuality = nullptr,
                                  const MetricWeights& weights = {}) {
    BatchReport batch;
    batch.reports.reserve(pairs.size());
    for (const auto& [cand, ref] : pairs) {
        MetricReport rep = evaluate_pair(cand, ref, embedder, weights);
        if (factuality) {
            try {
                auto [align, summac] = factuality(cand, ref);
                rep.alignscore = align;
                rep.summac = summac;
            } catch (const std::exception&) {
                batch.factuality_warning = true;
            }
        }
        batch.reports.push_back(std::move(rep));
    }
    if (!batch.reports.empty()) {
        const double n = static_cast<double>(batch.reports.size());
        auto add_prf = [](Prf& acc, const Prf& x) {
            acc.precision += x.precision;
            acc.recall += x.recall;
            acc.f1 += x.f1;
        };
        double align_sum = 0.0, summac_sum = 0.0;
        std::size_t align_n = 0, summac_n = 0;
        for (const auto& rep : batch.reports) {
            add_prf(batch.means.rouge1, rep.rouge1);
            add_prf(batch.means.rouge2, rep.rouge2);
            add_prf(batch.means.rouge_l, rep.rouge_l);
            add_prf(batch.means.bertscore, rep.bertscore);
            batch.means.bleu += rep.bleu;
            batch.means.meteor += rep.meteor;
            batch.means.composite += rep.composite;
            if (rep.alignscore) { align_sum += *rep.alignscore; ++align_n; }
            if (rep.summac) { summac_sum += *rep.summac; ++summac_n; }
        }
        auto div_prf = [n](Prf& p) { p.precision /= n; p.recall /= n; p.f1 /= n; };
        div_prf(batch.means.rouge1);
        div_prf(batch.means.rouge2);
        div_prf(batch.means.rouge_l);
        div_prf(batch.means.bertscore);
        batch.means.bleu /= n;
        batch.means.meteor /= n;
        batch.means.composite /= n;
        if (align_n) batch.means.alignscore = align_sum / static_cast<double>(align_n);
        if (summac_n) batch.means.summac = summac_sum / static_cast<double>(summac_n);
    }
    batch.corpus_bleu = corpus_bleu(pairs);
    return batch;
}

inline nlohmann::ordered_json metric_report_to_json(const MetricReport& rep) {
    auto prf_json = [](const Prf& p) {
        return nlohmann::ordered_json{
            {"precision", p.precision}, {"recall", p.recall}, {"f1", p.f1}};
    };
    nlohmann::ordered_json j;
    j["rouge1"] = prf_json(rep.rouge1);
    j["rouge2"] = prf_json(rep.rouge2);
    j["rougeL"] = prf_json(rep.rouge_l);
    j["bleu"] = rep.bleu;
    j["meteor"] = rep.meteor;
    j["bertscore"] = prf_json(rep.bertscore);
    j["alignscore"] = rep.alignscore ? nlohmann::ordered_json(*rep.alignscore)
                                     : nlohmann::ordered_json(nullptr);
    j["summac"] = rep.summac ? nlohmann::ordered_json(*rep.summac) : nlohmann::ordered_json(nullptr);
    j["composite"] = rep.composite;
    return j;
}

}  // namespace perspectra

#endif
