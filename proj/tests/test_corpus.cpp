#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "perspectra/corpus.hpp"
#include "support/temp.hpp"

using namespace perspectra;
using perspectra::testing::TempDir;

namespace {

const char* kTwoThreads = R"({"id":"t1","question":"q1","context":null,"answers":["Take ibuprofen."],"spans":[{"answer_index":0,"start":0,"end":15,"label":"Suggestion"}],"summaries":{"Suggestion":"It is suggested to take ibuprofen."}}
{"id":"t2","question":"q2","context":"ctx","answers":["It hurts.","Rest a lot."],"spans":[{"answer_index":1,"start":0,"end":11,"label":"Suggestion"},{"answer_index":0,"start":0,"end":9,"label":"Experience"}],"summaries":{}}
)";

}  // namespace

TEST_CASE("load_corpus keeps well-formed threads", "[corpus]") {
    TempDir tmp;
    const auto corpus = load_corpus(tmp.write("ok.jsonl", kTwoThreads), Split::train);
    REQUIRE(corpus.threads.size() == 2);
    CHECK(corpus.split == Split::train);
    CHECK(corpus.threads[0].id == "t1");
    CHECK(corpus.threads[0].context == std::nullopt);
    CHECK(corpus.threads[1].context == "ctx");
    REQUIRE(corpus.threads[0].gold_spans.size() == 1);
    CHECK(corpus.threads[0].gold_spans[0].text == "Take ibuprofen.");
    CHECK(corpus.threads[0].gold_summaries.at(Perspective::Suggestion) ==
          "It is suggested to take ibuprofen.");
}

TEST_CASE("span past the answer end is a validation error", "[corpus]") {
    TempDir tmp;
    const std::string bad =
        R"({"id":"t1","question":"q","answers":["short"],"spans":[{"answer_index":0,"start":0,"end":99,"label":"Cause"}],"summaries":{}})";
    REQUIRE_THROWS_MATCHES(load_corpus(tmp.write("bad.jsonl", bad + "\n"), Split::train),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("t1") &&
                               Catch::Matchers::ContainsSubstring("out of bounds")));
}

TEST_CASE("unknown perspective label is a validation error", "[corpus]") {
    TempDir tmp;
    const std::string bad =
        R"({"id":"t9","question":"q","answers":["abcdef"],"spans":[{"answer_index":0,"start":0,"end":3,"label":"Opinion"}],"summaries":{}})";
    REQUIRE_THROWS_AS(load_corpus(tmp.write("bad.jsonl", bad + "\n"), Split::train),
                      ValidationError);
}

TEST_CASE("malformed record names the thread and field", "[corpus]") {
    TempDir tmp;
    const std::string bad = R"({"id":"t3","question":"q","spans":[],"summaries":{}})";
    REQUIRE_THROWS_MATCHES(load_corpus(tmp.write("bad.jsonl", bad + "\n"), Split::train),
                           ParseError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("t3") &&
                               Catch::Matchers::ContainsSubstring("answers")));
}

TEST_CASE("summary without a matching span label is rejected", "[corpus]") {
    TempDir tmp;
    const std::string bad =
        R"({"id":"t4","question":"q","answers":["abcdef"],"spans":[{"answer_index":0,"start":0,"end":3,"label":"Cause"}],"summaries":{"Question":"nope"}})";
    REQUIRE_THROWS_MATCHES(load_corpus(tmp.write("bad.jsonl", bad + "\n"), Split::train),
                           ValidationError,
                           Catch::Matchers::MessageMatches(
                               Catch::Matchers::ContainsSubstring("no gold span")));
}

TEST_CASE("duplicate thread ids are rejected", "[corpus]") {
    TempDir tmp;
    const std::string rec =
        R"({"id":"dup","question":"q","answers":["abcdef"],"spans":[],"summaries":{}})";
    REQUIRE_THROWS_MATCHES(
        load_corpus(tmp.write("bad.jsonl", rec + "\n" + rec + "\n"), Split::train),
        ValidationError,
        Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("duplicate")));
}

TEST_CASE("span offsets are unicode scalars, not bytes", "[corpus]") {
    TempDir tmp;
    // "naïve påtient" has multi-byte characters before the span.
    const std::string rec =
        "{\"id\":\"u1\",\"question\":\"q\",\"answers\":[\"naïve påtient\"],"
        "\"spans\":[{\"answer_index\":0,\"start\":6,\"end\":13,\"label\":\"Information\"}],"
        "\"summaries\":{}}";
    const auto corpus = load_corpus(tmp.write("u.jsonl", rec + "\n"), Split::validation);
    REQUIRE(corpus.threads[0].gold_spans.size() == 1);
    CHECK(corpus.threads[0].gold_spans[0].text == "påtient");
}

TEST_CASE("serialize then reload round-trips the fixture corpus", "[corpus]") {
    const auto corpus =
        load_corpus(std::string(PERSPECTRA_TESTS_DATA_DIR) + "/fixture_corpus.jsonl", Split::train);
    REQUIRE(corpus.threads.size() == 6);
    TempDir tmp;
    save_corpus(corpus, tmp.file("copy.jsonl"));
    const auto reloaded = load_corpus(tmp.file("copy.jsonl"), Split::train);
    REQUIRE(corpus == reloaded);
}

TEST_CASE("corpus_stats tallies per label", "[corpus]") {
    Corpus corpus;
    CqaThread t;
    t.id = "s1";
    t.question = "q";
    t.answers = {"alpha beta gamma delta"};
    t.gold_spans.push_back({0, 0, 5, Perspective::Information, "alpha"});
    t.gold_spans.push_back({0, 6, 10, Perspective::Information, "beta"});
    t.gold_spans.push_back({0, 11, 16, Perspective::Question, "gamma"});
    corpus.threads.push_back(t);

    const auto stats = corpus_stats(corpus);
    CHECK(stats.total_threads == 1);
    CHECK(stats.total_spans == 3);
    CHECK(stats.span_counts.at(Perspective::Information) == 2);
    CHECK(stats.span_counts.at(Perspective::Question) == 1);
    CHECK(stats.span_counts.at(Perspective::Cause) == 0);
    CHECK_THAT(stats.span_percentages.at(Perspective::Information),
               Catch::Matchers::WithinAbs(200.0 / 3.0, 1e-9));
    CHECK_THAT(stats.span_percentages.at(Perspective::Question),
               Catch::Matchers::WithinAbs(100.0 / 3.0, 1e-9));
    CHECK(stats.span_percentages.at(Perspective::Experience) == 0.0);
}

TEST_CASE("empty corpus yields zero counts", "[corpus]") {
    const auto stats = corpus_stats(Corpus{});
    CHECK(stats.total_threads == 0);
    CHECK(stats.total_spans == 0);
    for (Perspective p : kAllPerspectives) {
        CHECK(stats.span_counts.at(p) == 0);
        CHECK(stats.span_percentages.at(p) == 0.0);
    }
}

TEST_CASE("stats agree with a brute-force flat scan", "[corpus]") {
    const auto corpus =
        load_corpus(std::string(PERSPECTRA_TESTS_DATA_DIR) + "/fixture_corpus.jsonl", Split::train);
    const auto stats = corpus_stats(corpus);

    std::map<Perspective, std::size_t> flat;
    std::size_t total = 0;
    for (const auto& t : corpus.threads)
        for (const auto& s : t.gold_spans) {
            ++flat[s.label];
            ++total;
        }
    CHECK(stats.total_spans == total);
    double pct_sum = 0.0;
    for (Perspective p : kAllPerspectives) {
        CHECK(stats.span_counts.at(p) == flat[p]);
        pct_sum += stats.span_percentages.at(p);
    }
    CHECK_THAT(pct_sum, Catch::Matchers::WithinAbs(100.0, 1e-6));
}
