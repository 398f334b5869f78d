#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>

#include "perspectra/spanid.hpp"
#include "support/oracles.hpp"

using namespace perspectra;

namespace {

ProbRows random_rows(std::mt19937_64& rng, std::size_t t, std::size_t c) {
    std::uniform_real_distribution<double> u(0.01, 1.0);
    ProbRows rows(t, std::vector<double>(c));
    for (auto& row : rows) {
        double sum = 0.0;
        for (auto& v : row) {
            v = u(rng);
            sum += v;
        }
        for (auto& v : row) v /= sum;
    }
    return rows;
}

ProbRows one_hot_rows(const std::vector<std::size_t>& tags) {
    ProbRows rows(tags.size(), std::vector<double>(kNumBioClasses, 0.0));
    for (std::size_t i = 0; i < tags.size(); ++i) rows[i][tags[i]] = 1.0;
    return rows;
}

}  // namespace

TEST_CASE("single member averaging is the identity", "[spanid]") {
    std::mt19937_64 rng(7);
    ProbMatrix m{"only", random_rows(rng, 9, kNumBioClasses)};
    const auto out = average_probabilities({m});
    REQUIRE(out.rows == m.rows);  // exact, not approximate
}

TEST_CASE("three-member mean over a two-class test shape", "[spanid]") {
    ProbMatrix a{"a", {{0.2, 0.8}}};
    ProbMatrix b{"b", {{0.4, 0.6}}};
    ProbMatrix c{"c", {{0.6, 0.4}}};
    const auto out = average_probabilities({a, b, c});
    REQUIRE(out.rows.size() == 1);
    CHECK_THAT(out.rows[0][0], Catch::Matchers::WithinAbs(0.4, 1e-12));
    CHECK_THAT(out.rows[0][1], Catch::Matchers::WithinAbs(0.6, 1e-12));
}

TEST_CASE("empty member list and shape mismatches are errors", "[spanid]") {
    CHECK_THROWS_AS(average_probabilities({}), ValidationError);
    ProbMatrix a{"bert", {{0.5, 0.5}}};
    ProbMatrix b{"roberta", {{0.5, 0.5}, {1.0, 0.0}}};
    REQUIRE_THROWS_MATCHES(average_probabilities({a, b}), ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("bert") &&
                               Catch::Matchers::ContainsSubstring("roberta")));
}

TEST_CASE("averaging matches the brute-force oracle", "[spanid]") {
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const std::size_t k = 1 + rng() % 5;
        const std::size_t t = 1 + rng() % 50;
        std::vector<ProbMatrix> members;
        std::vector<ProbRows> raw;
        for (std::size_t i = 0; i < k; ++i) {
            auto rows = random_rows(rng, t, kNumBioClasses);
            raw.push_back(rows);
            members.push_back({"m" + std::to_string(i), std::move(rows)});
        }
        const auto out = average_probabilities(members);
        const auto expected = perspectra::testing::oracle_mean(raw);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < kNumBioClasses; ++j)
                REQUIRE_THAT(out.rows[i][j], Catch::Matchers::WithinAbs(expected[i][j], 1e-12));
    }
}

TEST_CASE("averaging properties: permutation, row sums, bounds", "[spanid]") {
    std::mt19937_64 rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<ProbMatrix> members;
        const std::size_t k = 2 + rng() % 4;
        const std::size_t t = 1 + rng() % 12;
        for (std::size_t i = 0; i < k; ++i)
            members.push_back({"m" + std::to_string(i), random_rows(rng, t, kNumBioClasses)});

        const auto base = average_probabilities(members);
        auto shuffled = members;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        const auto permuted = average_probabilities(shuffled);
        for (std::size_t i = 0; i < t; ++i)
            for (std::size_t j = 0; j < kNumBioClasses; ++j)
                REQUIRE_THAT(permuted.rows[i][j],
                             Catch::Matchers::WithinAbs(base.rows[i][j], 1e-12));

        for (std::size_t i = 0; i < t; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < kNumBioClasses; ++j) {
                double lo = 1.0, hi = 0.0;
                for (const auto& m : members) {
                    lo = std::min(lo, m.rows[i][j]);
                    hi = std::max(hi, m.rows[i][j]);
                }
                REQUIRE(base.rows[i][j] >= lo - 1e-12);
                REQUIRE(base.rows[i][j] <= hi + 1e-12);
                sum += base.rows[i][j];
            }
            REQUIRE_THAT(sum, Catch::Matchers::WithinAbs(1.0, 1e-9));
        }
    }
}

TEST_CASE("argmax breaks ties towards the lowest class, O last", "[spanid]") {
    std::vector<double> row(kNumBioClasses, 0.0);
    row[kOutsideClass] = 0.5;
    row[bio_begin_class(Perspective::Cause)] = 0.5;
    CHECK(argmax_class(row) == bio_begin_class(Perspective::Cause));
    std::vector<double> uniform(kNumBioClasses, 1.0 / kNumBioClasses);
    CHECK(argmax_class(uniform) == 0);
}

TEST_CASE("all-O rows decode to no spans", "[spanid]") {
    const std::string answer = "aa bb cc";
    const auto tokens = tokenize_words(answer);
    const auto out = decode_spans(EnsembleOutput{one_hot_rows({kOutsideClass, kOutsideClass,
                                                               kOutsideClass})},
                                  tokens, answer, 0);
    CHECK(out.empty());
}

TEST_CASE("BIO grouping produces spans with character offsets", "[spanid]") {
    const std::string answer = "aa bb cc dd";
    const auto tokens = tokenize_words(answer);
    const std::vector<std::size_t> tags = {
        bio_begin_class(Perspective::Information), bio_inside_class(Perspective::Information),
        kOutsideClass, bio_begin_class(Perspective::Cause)};
    const auto spans = decode_spans(EnsembleOutput{one_hot_rows(tags)}, tokens, answer, 3);
    REQUIRE(spans.size() == 2);
    CHECK(spans[0] == PerspectiveSpan{3, 0, 5, Perspective::Information, "aa bb"});
    CHECK(spans[1] == PerspectiveSpan{3, 9, 11, Perspective::Cause, "dd"});
}

TEST_CASE("headless I tags are repaired to B", "[spanid]") {
    const auto repaired = repair_bio_tags({bio_inside_class(Perspective::Question),
                                           bio_inside_class(Perspective::Question),
                                           bio_inside_class(Perspective::Cause)});
    CHECK(repaired[0] == bio_begin_class(Perspective::Question));
    CHECK(repaired[1] == bio_inside_class(Perspective::Question));
    CHECK(repaired[2] == bio_begin_class(Perspective::Cause));
}

TEST_CASE("decode shape mismatch is an error", "[spanid]") {
    const auto tokens = tokenize_words("aa bb");
    CHECK_THROWS_AS(decode_spans(EnsembleOutput{one_hot_rows({kOutsideClass})}, tokens, "aa bb", 0),
                    ValidationError);
}

TEST_CASE("decode then encode reproduces the repaired tags", "[spanid]") {
    std::mt19937_64 rng(501);
    // One long synthetic answer; the token grid stays fixed per trial length.
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + rng() % 24;
        std::string answer;
        for (std::size_t i = 0; i < n; ++i) {
            if (!answer.empty()) answer += ' ';
            answer += "w" + std::to_string(i);
        }
        const auto tokens = tokenize_words(answer);
        REQUIRE(tokens.size() == n);
        std::vector<std::size_t> tags(n);
        for (auto& t : tags) t = rng() % kNumBioClasses;

        const auto repaired = repair_bio_tags(tags);
        const auto spans = spans_from_tags(tags, tokens, answer, 0);
        CHECK(encode_bio_tags(spans, tokens) == repaired);

        // never overlapping, always start < end, sorted
        for (std::size_t i = 0; i < spans.size(); ++i) {
            REQUIRE(spans[i].start < spans[i].end);
            if (i > 0) REQUIRE(spans[i - 1].end <= spans[i].start);
        }
    }
}
