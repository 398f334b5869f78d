#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "perspectra/stem.hpp"
#include "perspectra/summeval.hpp"
#include "support/oracles.hpp"

using namespace perspectra;
namespace pt = perspectra::testing;

TEST_CASE("porter stemmer reproduces reference outputs", "[summeval]") {
    // Pairs from the canonical Porter test vocabulary.
    const std::pair<const char*, const char*> pairs[] = {
        {"caresses", "caress"}, {"ponies", "poni"},     {"ties", "ti"},
        {"cats", "cat"},        {"feed", "feed"},       {"agreed", "agre"},
        {"plastered", "plaster"}, {"motoring", "motor"}, {"sing", "sing"},
        {"hopping", "hop"},     {"falling", "fall"},    {"filing", "file"},
        {"happy", "happi"},     {"sky", "sky"},         {"relational", "relat"},
        {"conditional", "condit"}, {"rational", "ration"}, {"digitizer", "digit"},
        {"conformabli", "conform"}, {"radicalli", "radic"}, {"hopefulness", "hope"},
        {"callousness", "callous"}, {"formaliti", "formal"}, {"sensitiviti", "sensit"},
        {"sensibiliti", "sensibl"}, {"triplicate", "triplic"}, {"formative", "form"},
        {"formalize", "formal"},  {"electriciti", "electr"}, {"electrical", "electr"},
        {"hopeful", "hope"},      {"goodness", "good"},   {"revival", "reviv"},
        {"allowance", "allow"},   {"inference", "infer"}, {"airliner", "airlin"},
        {"gyroscopic", "gyroscop"}, {"adjustable", "adjust"}, {"defensible", "defens"},
        {"irritant", "irrit"},    {"replacement", "replac"}, {"adjustment", "adjust"},
        {"dependent", "depend"},  {"adoption", "adopt"},  {"communism", "commun"},
        {"activate", "activ"},    {"angulariti", "angular"}, {"homologous", "homolog"},
        {"effective", "effect"},  {"bowdlerize", "bowdler"}, {"probate", "probat"},
        {"rate", "rate"},         {"cease", "ceas"},      {"controll", "control"},
        {"roll", "roll"},         {"a", "a"},             {"is", "is"},
    };
    for (const auto& [word, stem] : pairs) CHECK(porter_stem(word) == stem);
    CHECK(porter_stem("Can't") == "Can't");  // non a-z passes through
}

TEST_CASE("rouge-n on the cat/mat pair", "[summeval]") {
    const auto prf = rouge_n("the cat sat on the mat", "the cat is on the mat", 1);
    CHECK_THAT(prf.precision, Catch::Matchers::WithinAbs(5.0 / 6.0, 1e-12));
    CHECK_THAT(prf.recall, Catch::Matchers::WithinAbs(5.0 / 6.0, 1e-12));
    CHECK_THAT(prf.f1, Catch::Matchers::WithinAbs(5.0 / 6.0, 1e-12));
}

TEST_CASE("rouge-n trivials", "[summeval]") {
    CHECK(rouge_n("an apple a day", "an apple a day", 1).f1 == 1.0);
    CHECK(rouge_n("an apple a day", "an apple a day", 2).f1 == 1.0);
    CHECK(rouge_n("alpha beta", "gamma delta", 1).f1 == 0.0);
    CHECK(rouge_n("", "anything here", 1).f1 == 0.0);
    CHECK_THROWS_AS(rouge_n("a", "b", 3), ValidationError);
}

TEST_CASE("rouge-l via LCS", "[summeval]") {
    CHECK(rouge_l("same words here", "same words here").f1 == 1.0);
    const auto prf = rouge_l("the cat sat on the mat", "the cat is on the mat");
    CHECK_THAT(prf.f1, Catch::Matchers::WithinAbs(5.0 / 6.0, 1e-12));
    CHECK(rouge_l("", "non empty").f1 == 0.0);
}

TEST_CASE("rouge-l agrees with a memoized LCS oracle", "[summeval]") {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cand = pt::random_tokens(rng, 1, 12);
        const auto ref = pt::random_tokens(rng, 1, 12);
        const double lcs = static_cast<double>(pt::oracle_lcs(cand, ref));
        const auto prf = rouge_l(pt::join_tokens(cand), pt::join_tokens(ref));
        CHECK_THAT(prf.precision,
                   Catch::Matchers::WithinAbs(lcs / static_cast<double>(cand.size()), 1e-12));
        CHECK_THAT(prf.recall,
                   Catch::Matchers::WithinAbs(lcs / static_cast<double>(ref.size()), 1e-12));
    }
}

TEST_CASE("bleu trivials", "[summeval]") {
    CHECK(bleu("take iron supplements daily", "take iron supplements daily") == 1.0);
    CHECK(bleu("", "whatever") == 0.0);
    CHECK(bleu("alpha beta gamma delta", "epsilon zeta eta theta") == 0.0);
}

TEST_CASE("bleu matches the independent oracle on random pairs", "[summeval]") {
    std::mt19937_64 rng(8181);
    for (int trial = 0; trial < 200; ++trial) {
        const auto cand = pt::random_tokens(rng, 1, 10);
        const auto ref = pt::random_tokens(rng, 1, 10);
        const double mine = bleu(pt::join_tokens(cand), pt::join_tokens(ref));
        const double oracle = pt::oracle_bleu(cand, ref);
        REQUIRE_THAT(mine, Catch::Matchers::WithinAbs(oracle, 1e-6));
    }
}

TEST_CASE("meteor formula cases", "[summeval]") {
    // identical 5-token texts: F_mean 1, penalty 0.5*(1/5)^3
    CHECK_THAT(meteor("iron helps with the fatigue", "iron helps with the fatigue"),
               Catch::Matchers::WithinAbs(0.996, 1e-9));
    CHECK(meteor("alpha beta", "gamma delta") == 0.0);
    CHECK(meteor("cats", "cat") > 0.0);  // stem-stage match
    CHECK(meteor("", "ref") == 0.0);
}

TEST_CASE("meteor chunk penalty tracks word order", "[summeval]") {
    const double ordered = meteor("a b c d e", "a b c d e");
    const double scrambled = meteor("e d c b a", "a b c d e");
    CHECK(ordered > scrambled);
    CHECK(scrambled > 0.0);
}

namespace {

TokenEmbedder fixed_embedder(std::map<std::string, std::vector<double>> table) {
    return [table = std::move(table)](const std::string& text) {
        TokenEmbeddings out;
        for (const auto& tok : tokenize_words(text)) {
            out.tokens.push_back(tok.text);
            out.vectors.push_back(table.at(tok.text));
        }
        return out;
    };
}

}  // namespace

TEST_CASE("bertscore self-similarity and orthogonality", "[summeval]") {
    const auto embedder = fixed_embedder({{"aspirin", {1.0, 0.0}},
                                          {"rest", {0.0, 1.0}},
                                          {"water", {0.7, 0.7}}});
    const auto same = bertscore("aspirin rest", "aspirin rest", embedder);
    CHECK_THAT(same.f1, Catch::Matchers::WithinAbs(1.0, 1e-6));
    const auto ortho = bertscore("aspirin", "rest", embedder);
    CHECK(ortho.f1 == 0.0);
    CHECK_THROWS_AS(bertscore("", "rest", embedder), ValidationError);
}

TEST_CASE("bertscore greedy matching equals brute-force enumeration", "[summeval]") {
    std::mt19937_64 rng(9090);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t nc = 1 + rng() % 6, nr = 1 + rng() % 6, dim = 3;
        std::vector<std::vector<double>> cv(nc, std::vector<double>(dim)),
            rv(nr, std::vector<double>(dim));
        for (auto& v : cv)
            for (auto& x : v) x = u(rng);
        for (auto& v : rv)
            for (auto& x : v) x = u(rng);

        std::string cand, ref;
        std::map<std::string, std::vector<double>> table;
        for (std::size_t i = 0; i < nc; ++i) {
            cand += (i ? " " : "") + ("c" + std::to_string(i));
            table["c" + std::to_string(i)] = cv[i];
        }
        for (std::size_t j = 0; j < nr; ++j) {
            ref += (j ? " " : "") + ("r" + std::to_string(j));
            table["r" + std::to_string(j)] = rv[j];
        }
        const auto got = bertscore(cand, ref, fixed_embedder(table));

        auto cos = [&](const std::vector<double>& a, const std::vector<double>& b) {
            double dot = 0, na = 0, nb = 0;
            for (std::size_t k = 0; k < a.size(); ++k) {
                dot += a[k] * b[k];
                na += a[k] * a[k];
                nb += b[k] * b[k];
            }
            return (na <= 0 || nb <= 0) ? 0.0 : dot / std::sqrt(na) / std::sqrt(nb);
        };
        double psum = 0;
        for (std::size_t i = 0; i < nc; ++i) {
            double best = 0;
            for (std::size_t j = 0; j < nr; ++j) best = std::max(best, cos(cv[i], rv[j]));
            psum += std::clamp(best, 0.0, 1.0);
        }
        double rsum = 0;
        for (std::size_t j = 0; j < nr; ++j) {
            double best = 0;
            for (std::size_t i = 0; i < nc; ++i) best = std::max(best, cos(rv[j], cv[i]));
            rsum += std::clamp(best, 0.0, 1.0);
        }
        REQUIRE_THAT(got.precision,
                     Catch::Matchers::WithinAbs(psum / static_cast<double>(nc), 1e-9));
        REQUIRE_THAT(got.recall, Catch::Matchers::WithinAbs(rsum / static_cast<double>(nr), 1e-9));
    }
}

TEST_CASE("composite arithmetic", "[summeval]") {
    CHECK_THAT(composite(0.5, 0.5, 0.5, 0.5), Catch::Matchers::WithinAbs(0.5, 1e-12));
    CHECK(composite(0.0, 0.0, 0.0, 0.0) == 0.0);
    // pinned reference point: reported guided-CoT optimization scores
    CHECK_THAT(composite(0.346, 0.091, 0.328, 0.830),
               Catch::Matchers::WithinAbs(0.39875, 1e-9));
    CHECK_THROWS_AS(composite(CompositeInputs{0.5, std::nullopt, 0.5, 0.5}), ValidationError);
    MetricWeights bad{0.5, 0.5, 0.5, 0.5};
    CHECK_THROWS_AS(composite(0.1, 0.1, 0.1, 0.1, bad), ValidationError);
}

TEST_CASE("composite is monotone in each sub-score", "[summeval]") {
    std::mt19937_64 rng(555);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        double v[4] = {u(rng), u(rng), u(rng), u(rng)};
        const double base = composite(v[0], v[1], v[2], v[3]);
        const int which = static_cast<int>(rng() % 4);
        double w[4] = {v[0], v[1], v[2], v[3]};
        w[which] = std::min(1.0, w[which] + u(rng));
        REQUIRE(composite(w[0], w[1], w[2], w[3]) >= base - 1e-12);
    }
}

TEST_CASE("metrics ignore case and surrounding whitespace", "[summeval]") {
    CHECK(rouge_n("  The CAT  ", "the cat", 1).f1 == 1.0);
    CHECK(bleu("Iron Helps With Fatigue Daily", "iron helps with fatigue daily") == 1.0);
    CHECK(meteor("REST your Voice", "rest your voice") ==
          meteor("rest your voice", "rest your voice"));
}

TEST_CASE("all metric outputs stay in [0, 1]", "[summeval]") {
    std::mt19937_64 rng(6666);
    for (int trial = 0; trial < 300; ++trial) {
        const std::string cand = pt::join_tokens(pt::random_tokens(rng, 0, 8));
        const std::string ref = pt::join_tokens(pt::random_tokens(rng, 0, 8));
        for (double v : {rouge_n(cand, ref, 1).f1, rouge_n(cand, ref, 2).f1,
                         rouge_l(cand, ref).f1, bleu(cand, ref), meteor(cand, ref)}) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
        const auto swapped = rouge_l(ref, cand);
        CHECK_THAT(rouge_l(cand, ref).f1, Catch::Matchers::WithinAbs(swapped.f1, 1e-12));
    }
}

TEST_CASE("evaluate_batch computes means and handles factuality failure", "[summeval]") {
    const auto embedder = fixed_embedder({{"iron", {1.0, 0.2}},
                                          {"rest", {0.1, 0.9}},
                                          {"water", {0.4, 0.4}}});
    SECTION("empty input") {
        const auto batch = evaluate_batch({}, embedder);
        CHECK(batch.reports.empty());
    }
    SECTION("identical pairs score 1 everywhere") {
        const auto batch = evaluate_batch({{"iron rest", "iron rest"},
                                           {"water iron rest water iron", "water iron rest water iron"}},
                                          embedder);
        REQUIRE(batch.reports.size() == 2);
        for (const auto& rep : batch.reports) {
            CHECK(rep.rouge1.f1 == 1.0);
            CHECK(rep.rouge_l.f1 == 1.0);
            CHECK(rep.bertscore.f1 >= 1.0 - 1e-9);
        }
        CHECK(batch.reports[1].bleu == 1.0);
        // means are plain arithmetic means
        CHECK_THAT(batch.means.composite,
                   Catch::Matchers::WithinAbs(
                       (batch.reports[0].composite + batch.reports[1].composite) / 2.0, 1e-12));
        CHECK_THAT(batch.means.meteor,
                   Catch::Matchers::WithinAbs(
                       (batch.reports[0].meteor + batch.reports[1].meteor) / 2.0, 1e-12));
        CHECK_FALSE(batch.means.alignscore.has_value());
    }
    SECTION("factuality scorer results flow into reports") {
        FactualityScorer scorer = [](const std::string&, const std::string&) {
            return std::pair<std::optional<double>, std::optional<double>>{0.7, 0.6};
        };
        const auto batch = evaluate_batch({{"iron", "iron"}}, embedder, scorer);
        REQUIRE(batch.reports[0].alignscore == 0.7);
        REQUIRE(batch.reports[0].summac == 0.6);
        CHECK(batch.means.alignscore == 0.7);
        CHECK_FALSE(batch.factuality_warning);
    }
    SECTION("factuality failure leaves nulls and a warning, relevance intact") {
        FactualityScorer scorer = [](const std::string&, const std::string&)
            -> std::pair<std::optional<double>, std::optional<double>> {
            throw HttpError("factuality down", 500, "", 5);
        };
        const auto batch = evaluate_batch({{"iron rest", "iron rest"}}, embedder, scorer);
        CHECK(batch.factuality_warning);
        CHECK_FALSE(batch.reports[0].alignscore.has_value());
        CHECK(batch.reports[0].rouge1.f1 == 1.0);
    }
}

TEST_CASE("empty candidate still yields a zero-composite report", "[summeval]") {
    const auto embedder = fixed_embedder({{"ref", {1.0}}});
    const auto rep = evaluate_pair("", "ref", embedder);
    CHECK(rep.composite == 0.0);
    CHECK(rep.bertscore.f1 == 0.0);
}
