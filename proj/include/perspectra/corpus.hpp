#ifndef PERSPECTRA_CORPUS_HPP
#define PERSPECTRA_CORPUS_HPP

#include <cstddef>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "perspectra/error.hpp"
#include "perspectra/perspective.hpp"
#include "perspectra/unicode.hpp"

namespace perspectra {

// A labeled character interval over one answer. Offsets count Unicode scalar
// values, half-open [start, end); text always equals the covered substring.
struct PerspectiveSpan {
    int answer_index = 0;
    std::size_t start = 0;
    std::size_t end = 0;
    Perspective label = Perspective::Information;
    std::string text;

    bool operator==(const PerspectiveSpan&) const = default;
    std::size_t length() const { return end - start; }
};

struct CqaThread {
    std::string id;
    std::string question;
    std::optional<std::string> context;
    std::vector<std::string> answers;
    std::vector<PerspectiveSpan> gold_spans;
    std::map<Perspective, std::string> gold_summaries;

    bool operator==(const CqaThread&) const = default;
};

enum class Split { train, validation, test };

inline std::string_view to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::validation: return "validation";
        case Split::test: return "test";
    }
    return "train";
}

inline Split parse_split(std::string_view s) {
    if (s == "train") return Split::train;
    if (s == "validation") return Split::validation;
    if (s == "test") return Split::test;
    throw ValidationError("unknown split tag: '" + std::string(s) + "' (expected train|validation|test)");
}

struct Corpus {
    Split split = Split::train;
    std::vector<CqaThread> threads;

    bool operator==(const Corpus&) const = default;
};

struct StatsReport {
    std::size_t total_threads = 0;
    std::size_t total_spans = 0;
    std::map<Perspective, std::size_t> span_counts;
    std::map<Perspective, double> span_percentages;
};

namespace detail {

inline std::string thread_label(const nlohmann::json& rec, std::size_t line_no) {
    if (rec.is_object() && rec.contains("id") && rec["id"].is_string())
        return "thread '" + rec["id"].get<std::string>() + "'";
    return "record at line " + std::to_string(line_no);
}

}  // namespace detail

// Validates one already-parsed thread record. Throws ParseError for schema
// problems and ValidationError for invariant violations, always naming the
// thread and the offending field.
inline CqaThread thread_from_json(const nlohmann::json& rec, std::size_t line_no = 0) {
    using nlohmann::json;
    const std::string who = detail::thread_label(rec, line_no);
    if (!rec.is_object()) throw ParseError(who + ": record is not a JSON object");

    auto require = [&](const char* field) -> const json& {
        if (!rec.contains(field))
            throw ParseError(who + ": missing field '" + field + "'");
        return rec[field];
    };

    CqaThread t;
    const json& jid = require("id");
    if (!jid.is_string()) throw ParseError(who + ": field 'id' must be a string");
    t.id = jid.get<std::string>();

    const json& jq = require("question");
    if (!jq.is_string()) throw ParseError(who + ": field 'question' must be a string");
    t.question = jq.get<std::string>();

    if (rec.contains("context") && !rec["context"].is_null()) {
        if (!rec["context"].is_string())
            throw ParseError(who + ": field 'context' must be a string or null");
        t.context = rec["context"].get<std::string>();
    }

    const json& jans = require("answers");
    if (!jans.is_array() || jans.empty())
        throw ValidationError(who + ": field 'answers' must be a non-empty array");
    for (const auto& a : jans) {
        if (!a.is_string()) throw ParseError(who + ": field 'answers' must contain only strings");
        t.answers.push_back(a.get<std::string>());
    }

    std::vector<std::size_t> answer_lengths;
    answer_lengths.reserve(t.answers.size());
    for (const auto& a : t.answers) answer_lengths.push_back(utf8_length(a));

    const json& jspans = require("spans");
    if (!jspans.is_array()) throw ParseError(who + ": field 'spans' must be an array");
    for (const auto& s : jspans) {
        if (!s.is_object() || !s.contains("answer_index") || !s.contains("start") ||
            !s.contains("end") || !s.contains("label"))
            throw ParseError(who + ": field 'spans' entries need answer_index/start/end/label");
        PerspectiveSpan span;
        if (!s["answer_index"].is_number_integer() || s["answer_index"].get<long long>() < 0)
            throw ValidationError(who + ": field 'spans.answer_index' must be an integer >= 0");
        span.answer_index = s["answer_index"].get<int>();
        if (span.answer_index >= static_cast<int>(t.answers.size()))
            throw ValidationError(who + ": field 'spans.answer_index' " +
                                  std::to_string(span.answer_index) + " out of range (" +
                                  std::to_string(t.answers.size()) + " answers)");
        if (!s["start"].is_number_integer() || !s["end"].is_number_integer() ||
            s["start"].get<long long>() < 0 || s["end"].get<long long>() < 0)
            throw ValidationError(who + ": field 'spans.start/end' must be integers >= 0");
        span.start = s["start"].get<std::size_t>();
        span.end = s["end"].get<std::size_t>();
        const std::size_t alen = answer_lengths[static_cast<std::size_t>(span.answer_index)];
        if (!(span.start < span.end && span.end <= alen))
            throw ValidationError(who + ": field 'spans' interval [" + std::to_string(span.start) +
                                  ", " + std::to_string(span.end) + ") out of bounds for answer " +
                                  std::to_string(span.answer_index) + " of length " +
                                  std::to_string(alen));
        if (!s["label"].is_string()) throw ParseError(who + ": field 'spans.label' must be a string");
        auto label = try_parse_perspective(s["label"].get<std::string>());
        if (!label)
            throw ValidationError(who + ": field 'spans.label' has unknown perspective '" +
                                  s["label"].get<std::string>() + "'");
        span.label = *label;
        span.text = utf8_slice(t.answers[static_cast<std::size_t>(span.answer_index)],
                               span.start, span.end);
        t.gold_spans.push_back(std::move(span));
    }

    const json& jsumm = require("summaries");
    if (!jsumm.is_object()) throw ParseError(who + ": field 'summaries' must be an object");
    std::set<Perspective> span_labels;
    for (const auto& s : t.gold_spans) span_labels.insert(s.label);
    for (auto it = jsumm.begin(); it != jsumm.end(); ++it) {
        auto label = try_parse_perspective(it.key());
        if (!label)
            throw ValidationError(who + ": field 'summaries' has unknown perspective '" +
                                  it.key() + "'");
        if (!it.value().is_string())
            throw ParseError(who + ": field 'summaries." + it.key() + "' must be a string");
        if (!span_labels.count(*label))
            throw ValidationError(who + ": field 'summaries' has entry for '" + it.key() +
                                  "' but no gold span carries that label");
        t.gold_summaries[*label] = it.value().get<std::string>();
    }
    return t;
}

inline nlohmann::ordered_json thread_to_json(const CqaThread& t) {
    nlohmann::ordered_json rec;
    rec["id"] = t.id;
    rec["question"] = t.question;
    rec["context"] = t.context ? nlohmann::ordered_json(*t.context) : nlohmann::ordered_json(nullptr);
    rec["answers"] = t.answers;
    auto spans = nlohmann::ordered_json::array();
    for (const auto& s : t.gold_spans) {
        spans.push_back({{"answer_index", s.answer_index},
                         {"start", s.start},
                         {"end", s.end},
                         {"label", std::string(to_string(s.label))}});
    }
    rec["spans"] = std::move(spans);
    auto summaries = nlohmann::ordered_json::object();
    for (const auto& [p, text] : t.gold_summaries) summaries[std::string(to_string(p))] = text;
    rec["summaries"] = std::move(summaries);
    return rec;
}

inline Corpus load_corpus_stream(std::istream& in, Split split, std::string_view source = "<stream>") {
    Corpus corpus;
    corpus.split = split;
    std::set<std::string> seen_ids;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(std::string(source) + ":" + std::to_string(line_no) +
                             ": invalid JSON: " + e.what());
        }
        CqaThread t = thread_from_json(rec, line_no);
        if (!seen_ids.insert(t.id).second)
            throw ValidationError(std::string(source) + ":" + std::to_string(line_no) +
                                  ": duplicate thread id '" + t.id + "'");
        corpus.threads.push_back(std::move(t));
    }
    return corpus;
}

// Canonical corpus file: UTF-8, one JSON thread object per line.
inline Corpus load_corpus(const std::string& path, Split split) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open corpus file: " + path);
    return load_corpus_stream(in, split, path);
}

inline void save_corpus_stream(const Corpus& corpus, std::ostream& out) {
    for (const auto& t : corpus.threads) out << thread_to_json(t).dump() << "\n";
}

inline void save_corpus(const Corpus& corpus, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write corpus file: " + path);
    save_corpus_stream(corpus, out);
}

inline StatsReport corpus_stats(const Corpus& corpus) {
    StatsReport report;
    report.total_threads = corpus.threads.size();
    for (Perspective p : kAllPerspectives) {
        report.span_counts[p] = 0;
        report.span_percentages[p] = 0.0;
    }
    for (const auto& t : corpus.threads)
        for (const auto& s : t.gold_spans) {
            ++report.span_counts[s.label];
            ++report.total_spans;
        }
    if (report.total_spans > 0)
        for (Perspective p : kAllPerspectives)
            report.span_percentages[p] =
                100.0 * static_cast<double>(report.span_counts[p]) /
                static_cast<double>(report.total_spans);
    return report;
}

inline nlohmann::ordered_json stats_to_json(const StatsReport& report) {
    nlohmann::ordered_json j;
    j["total_threads"] = report.total_threads;
    j["total_spans"] = report.total_spans;
    auto counts = nlohmann::ordered_json::object();
    auto pcts = nlohmann::ordered_json::object();
    for (Perspective p : kAllPerspectives) {
        counts[std::string(to_string(p))] = report.span_counts.at(p);
        pcts[std::string(to_string(p))] = report.span_percentages.at(p);
    }
    j["span_counts"] = std::move(counts);
    j["span_percentages"] = std::move(pcts);
    return j;
}

}  // namespace perspectra

#endif
