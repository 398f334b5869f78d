// perspectra: pipeline frontend for perspective-aware CQA summarization.
// Subcommands: ingest, stats, predict-spans, eval-spans, summarize,
// eval-summ, optimize, export-sft.

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include <nlohmann/json.hpp>

#include "perspectra/perspectra.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct GlobalOptions {
    std::string config_path = perspectra::kDefaultConfigPath;
    bool config_explicit = false;
};

perspectra::KitConfig load_config(const GlobalOptions& opts) {
    return perspectra::load_kit_config(opts.config_path, opts.config_explicit);
}

perspectra::GuideRegistry load_registry(const perspectra::KitConfig& cfg,
                                        const std::string& registry_flag) {
    perspectra::GuideRegistry registry;
    if (!registry_flag.empty())
        registry.apply_overrides_file(registry_flag);
    else if (cfg.guide_registry_path)
        registry.apply_overrides_file(*cfg.guide_registry_path);
    return registry;
}

std::string store_path(const perspectra::KitConfig& cfg, perspectra::Split split) {
    return (fs::path(cfg.data_dir) / (std::string(perspectra::to_string(split)) + ".jsonl"))
        .string();
}

perspectra::Corpus load_store_split(const perspectra::KitConfig& cfg, const std::string& split_tag) {
    const auto split = perspectra::parse_split(split_tag);
    const std::string path = store_path(cfg, split);
    if (!fs::exists(path))
        throw perspectra::ConfigError("no ingested data for split '" + split_tag +
                                      "' (expected " + path + "); run `perspectra ingest` first");
    return perspectra::load_corpus(path, split);
}

void write_text_file(const std::string& path, const std::string& content) {
    if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
    std::ofstream out(path);
    if (!out) throw perspectra::ParseError("cannot write file: " + path);
    out << content;
}

std::string read_text_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw perspectra::ParseError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// ingest / stats

int cmd_ingest(const GlobalOptions& g, const std::string& input, const std::string& split_tag) {
    const auto cfg = load_config(g);
    const auto split = perspectra::parse_split(split_tag);
    const auto corpus = perspectra::load_corpus(input, split);
    fs::create_directories(cfg.data_dir);
    perspectra::save_corpus(corpus, store_path(cfg, split));
    ordered_json out{{"split", split_tag},
                     {"threads", corpus.threads.size()},
                     {"stored", store_path(cfg, split)}};
    std::cout << out.dump() << "\n";
    return 0;
}

int cmd_stats(const GlobalOptions& g, const std::string& split_tag, const std::string& report_path) {
    const auto cfg = load_config(g);
    const auto corpus = load_store_split(cfg, split_tag);
    const auto report = perspectra::corpus_stats(corpus);
    std::cout << "split: " << split_tag << "\n";
    std::cout << "threads: " << report.total_threads << "\n";
    std::cout << "spans: " << report.total_spans << "\n";
    std::cout << std::left << std::setw(14) << "perspective" << std::right << std::setw(8)
              << "count" << std::setw(10) << "percent" << "\n";
    for (perspectra::Perspective p : perspectra::kAllPerspectives) {
        std::cout << std::left << std::setw(14) << perspectra::to_string(p) << std::right
                  << std::setw(8) << report.span_counts.at(p) << std::setw(9) << std::fixed
                  << std::setprecision(2) << report.span_percentages.at(p) << "%\n";
    }
    if (!report_path.empty())
        write_text_file(report_path, perspectra::stats_to_json(report).dump(2) + "\n");
    return 0;
}

// ---------------------------------------------------------------------------
// predict-spans

struct ProbKey {
    std::string thread_id;
    int answer_index;
    bool operator<(const ProbKey& o) const {
        return std::tie(thread_id, answer_index) < std::tie(o.thread_id, o.answer_index);
    }
};

int cmd_predict_spans(const GlobalOptions& g, const std::string& probs, const std::string& split_tag,
                      const std::string& out_path) {
    const auto cfg = load_config(g);
    const auto corpus = load_store_split(cfg, split_tag);
    std::map<std::string, const perspectra::CqaThread*> by_id;
    for (const auto& t : corpus.threads) by_id[t.id] = &t;

    std::map<ProbKey, std::vector<perspectra::ProbMatrix>> members;

    if (fs::is_directory(probs)) {
        for (const auto& entry : fs::directory_iterator(probs)) {
            if (!entry.is_regular_file()) continue;
            const auto ext = entry.path().extension();
            if (ext != ".json" && ext != ".jsonl") continue;
            std::ifstream in(entry.path());
            std::string line;
            std::size_t line_no = 0;
            while (std::getline(in, line)) {
                ++line_no;
                if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
                json rec;
                try {
                    rec = json::parse(line);
                } catch (const json::exception& e) {
                    throw perspectra::ParseError(entry.path().string() + ":" +
                                                 std::to_string(line_no) + ": invalid JSON: " +
                                                 e.what());
                }
                const std::string tid = rec.at("thread_id").get<std::string>();
                const int ai = rec.at("answer_index").get<int>();
                auto thread_it = by_id.find(tid);
                if (thread_it == by_id.end())
                    throw perspectra::ValidationError("probability file references unknown thread '" +
                                                      tid + "'");
                if (ai < 0 || ai >= static_cast<int>(thread_it->second->answers.size()))
                    throw perspectra::ValidationError("thread '" + tid + "': answer_index " +
                                                      std::to_string(ai) + " out of range");
                const auto expected =
                    perspectra::tokenize_words(thread_it->second->answers[static_cast<std::size_t>(ai)]);
                const auto& jtokens = rec.at("tokens");
                if (jtokens.size() != expected.size())
                    throw perspectra::ValidationError(
                        "thread '" + tid + "' answer " + std::to_string(ai) + ": provider '" +
                        rec.value("provider_id", std::string{"?"}) + "' token grid (" +
                        std::to_string(jtokens.size()) + ") does not match the kit tokenizer (" +
                        std::to_string(expected.size()) + ")");
                for (std::size_t i = 0; i < expected.size(); ++i) {
                    if (jtokens[i].at("text").get<std::string>() != expected[i].text ||
                        jtokens[i].at("start").get<std::size_t>() != expected[i].start ||
                        jtokens[i].at("end").get<std::size_t>() != expected[i].end)
                        throw perspectra::ValidationError("thread '" + tid + "' answer " +
                                                          std::to_string(ai) + ": token " +
                                                          std::to_string(i) +
                                                          " does not match the kit tokenizer");
                }
                perspectra::ProbMatrix m;
                m.provider_id = rec.value("provider_id", entry.path().filename().string());
                m.rows = rec.at("rows").get<perspectra::ProbRows>();
                if (m.rows.size() != expected.size())
                    throw perspectra::ValidationError("thread '" + tid + "' answer " +
                                                      std::to_string(ai) + ": provider '" +
                                                      m.provider_id + "' has " +
                                                      std::to_string(m.rows.size()) + " rows for " +
                                                      std::to_string(expected.size()) + " tokens");
                perspectra::validate_prob_rows(m.rows, "provider '" + m.provider_id + "'");
                members[ProbKey{tid, ai}].push_back(std::move(m));
            }
        }
        if (members.empty())
            throw perspectra::ValidationError("no probability records found under " + probs);
    } else {
        // Comma-separated token-probs endpoint names.
        std::vector<perspectra::EndpointConfig> providers;
        std::stringstream ss(probs);
        std::string name;
        while (std::getline(ss, name, ','))
            if (!name.empty())
                providers.push_back(
                    perspectra::resolve_endpoint(cfg, name, perspectra::EndpointKind::token_probs));
        if (providers.empty())
            throw perspectra::ConfigError("--probs must be a directory or endpoint names");
        perspectra::LlmClient client(cfg.client_config());
        for (const auto& t : corpus.threads) {
            for (std::size_t ai = 0; ai < t.answers.size(); ++ai) {
                const auto tokens = perspectra::tokenize_words(t.answers[ai]);
                if (tokens.empty()) continue;
                for (const auto& provider : providers) {
                    perspectra::ProbMatrix m;
                    m.provider_id = provider.name;
                    m.rows = client.token_probs(t.answers[ai], tokens, provider);
                    if (m.rows.size() != tokens.size())
                        throw perspectra::ValidationError("endpoint '" + provider.name +
                                                          "' returned wrong row count for thread '" +
                                                          t.id + "'");
                    perspectra::validate_prob_rows(m.rows, "endpoint '" + provider.name + "'");
                    members[ProbKey{t.id, static_cast<int>(ai)}].push_back(std::move(m));
                }
            }
        }
    }

    std::ostringstream out;
    std::size_t total_spans = 0;
    for (const auto& t : corpus.threads) {
        auto spans = ordered_json::array();
        for (std::size_t ai = 0; ai < t.answers.size(); ++ai) {
            auto it = members.find(ProbKey{t.id, static_cast<int>(ai)});
            if (it == members.end()) continue;
            const auto tokens = perspectra::tokenize_words(t.answers[ai]);
            const auto ensemble = perspectra::average_probabilities(it->second);
            for (const auto& s : perspectra::decode_spans(ensemble, tokens, t.answers[ai],
                                                          static_cast<int>(ai))) {
                spans.push_back({{"answer_index", s.answer_index},
                                 {"start", s.start},
                                 {"end", s.end},
                                 {"label", std::string(perspectra::to_string(s.label))}});
                ++total_spans;
            }
        }
        out << ordered_json{{"id", t.id}, {"spans", std::move(spans)}}.dump() << "\n";
    }
    write_text_file(out_path, out.str());
    std::cout << ordered_json{{"threads", corpus.threads.size()}, {"spans", total_spans},
                              {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval-spans

std::vector<perspectra::PerspectiveSpan> spans_from_record(const json& jspans,
                                                           const perspectra::CqaThread& thread) {
    std::vector<perspectra::PerspectiveSpan> spans;
    for (const auto& s : jspans) {
        perspectra::PerspectiveSpan span;
        span.answer_index = s.at("answer_index").get<int>();
        if (span.answer_index < 0 || span.answer_index >= static_cast<int>(thread.answers.size()))
            throw perspectra::ValidationError("thread '" + thread.id + "': prediction answer_index " +
                                              std::to_string(span.answer_index) + " out of range");
        span.start = s.at("start").get<std::size_t>();
        span.end = s.at("end").get<std::size_t>();
        const auto len =
            perspectra::utf8_length(thread.answers[static_cast<std::size_t>(span.answer_index)]);
        if (!(span.start < span.end && span.end <= len))
            throw perspectra::ValidationError("thread '" + thread.id + "': prediction span [" +
                                              std::to_string(span.start) + ", " +
                                              std::to_string(span.end) + ") out of bounds");
        span.label = perspectra::parse_perspective(s.at("label").get<std::string>());
        span.text = perspectra::utf8_slice(
            thread.answers[static_cast<std::size_t>(span.answer_index)], span.start, span.end);
        spans.push_back(std::move(span));
    }
    return spans;
}

int cmd_eval_spans(const GlobalOptions&, const std::string& pred_path, const std::string& gold_path,
                   const std::string& report_path) {
    const auto gold = perspectra::load_corpus(gold_path, perspectra::Split::test);
    std::map<std::string, const perspectra::CqaThread*> by_id;
    for (const auto& t : gold.threads) by_id[t.id] = &t;

    std::map<std::string, std::vector<perspectra::PerspectiveSpan>> predictions;
    std::ifstream in(pred_path);
    if (!in) throw perspectra::ParseError("cannot open predictions file: " + pred_path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json rec;
        try {
            rec = json::parse(line);
        } catch (const json::exception& e) {
            throw perspectra::ParseError(pred_path + ":" + std::to_string(line_no) +
                                         ": invalid JSON: " + e.what());
        }
        const std::string id = rec.contains("id") ? rec.at("id").get<std::string>()
                                                  : rec.at("thread_id").get<std::string>();
        auto it = by_id.find(id);
        if (it == by_id.end())
            throw perspectra::ValidationError("prediction references unknown thread '" + id + "'");
        predictions[id] = spans_from_record(rec.at("spans"), *it->second);
    }

    perspectra::SpanScorer scorer;
    std::size_t pred_total = 0, gold_total = 0;
    for (const auto& t : gold.threads) {
        std::vector<perspectra::TokenSeq> tokens;
        for (const auto& a : t.answers) tokens.push_back(perspectra::tokenize_words(a));
        auto it = predictions.find(t.id);
        static const std::vector<perspectra::PerspectiveSpan> empty;
        const auto& pred = it == predictions.end() ? empty : it->second;
        scorer.add_instance(pred, t.gold_spans, tokens);
        pred_total += pred.size();
        gold_total += t.gold_spans.size();
    }
    const auto score = scorer.finalize();
    ordered_json report = perspectra::span_score_to_json(score);
    report["threads"] = gold.threads.size();
    report["pred_spans"] = pred_total;
    report["gold_spans"] = gold_total;
    write_text_file(report_path, report.dump(2) + "\n");
    std::cout << ordered_json{{"macro_f1", score.macro_f1},
                              {"strict_f1", score.strict_f1},
                              {"proportional_f1", score.proportional_f1},
                              {"report", report_path}}
                     .dump()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// summarize

struct PromptFile {
    perspectra::Strategy strategy;
    std::map<std::string, std::string> instructions;
};

PromptFile load_prompt_file(const std::string& path) {
    json j;
    try {
        j = json::parse(read_text_file(path));
    } catch (const json::exception& e) {
        throw perspectra::ParseError("prompt file " + path + ": invalid JSON: " + e.what());
    }
    PromptFile out;
    out.strategy = perspectra::parse_strategy(j.at("strategy").get<std::string>());
    for (auto it = j.at("instructions").begin(); it != j.at("instructions").end(); ++it)
        out.instructions[it.key()] = it.value().get<std::string>();
    return out;
}

int cmd_summarize(const GlobalOptions& g, const std::string& split_tag, const std::string& strategy_tag,
                  const std::string& endpoint_name, const std::string& out_path,
                  const std::string& prompt_path, const std::string& spans_path,
                  const std::string& registry_flag) {
    const auto cfg = load_config(g);
    const auto corpus = load_store_split(cfg, split_tag);
    const auto strategy = perspectra::parse_strategy(strategy_tag);
    const auto registry = load_registry(cfg, registry_flag);
    const auto endpoint =
        perspectra::resolve_endpoint(cfg, endpoint_name, perspectra::EndpointKind::generation);
    perspectra::LlmClient client(cfg.client_config());

    perspectra::PromptProgram program = perspectra::PromptProgram::make(strategy);
    if (!prompt_path.empty()) {
        const PromptFile pf = load_prompt_file(prompt_path);
        if (pf.strategy != strategy)
            throw perspectra::ConfigError("prompt file strategy '" +
                                          std::string(perspectra::to_string(pf.strategy)) +
                                          "' does not match --strategy " + strategy_tag);
        for (const auto& [slot, text] : pf.instructions) program.instruction_slots[slot] = text;
    }

    // Span source: gold spans by default, or a predict-spans output file.
    std::map<std::string, std::vector<perspectra::PerspectiveSpan>> pred_spans;
    if (!spans_path.empty()) {
        std::map<std::string, const perspectra::CqaThread*> by_id;
        for (const auto& t : corpus.threads) by_id[t.id] = &t;
        std::ifstream in(spans_path);
        if (!in) throw perspectra::ParseError("cannot open spans file: " + spans_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const json rec = json::parse(line);
            const std::string id = rec.at("id").get<std::string>();
            auto it = by_id.find(id);
            if (it == by_id.end()) continue;
            pred_spans[id] = spans_from_record(rec.at("spans"), *it->second);
        }
    }

    std::ostringstream out;
    std::size_t written = 0;
    for (const auto& t : corpus.threads) {
        const std::vector<perspectra::PerspectiveSpan>* spans = &t.gold_spans;
        if (!spans_path.empty()) {
            auto it = pred_spans.find(t.id);
            static const std::vector<perspectra::PerspectiveSpan> empty;
            spans = it == pred_spans.end() ? &empty : &it->second;
        }
        for (perspectra::Perspective p : perspectra::kAllPerspectives) {
            std::vector<std::string> span_texts;
            for (const auto& s : *spans)
                if (s.label == p) span_texts.push_back(s.text);
            if (span_texts.empty()) continue;

            std::vector<std::string> keyphrases;
            if (strategy != perspectra::Strategy::vanilla) {
                const auto kp = perspectra::build_keyphrase_prompt(span_texts, program);
                perspectra::GenRequest req = cfg.base_request();
                req.system = kp.system;
                req.user = kp.user;
                keyphrases = perspectra::parse_keyphrases(client.chat_complete(req, endpoint).text).items;
            }
            const auto sp =
                perspectra::build_summary_prompt(p, span_texts, keyphrases, program, registry);
            perspectra::GenRequest req = cfg.base_request();
            req.system = sp.system;
            req.user = sp.user;
            const auto result = client.chat_complete(req, endpoint);
            out << ordered_json{{"thread_id", t.id},
                                {"perspective", std::string(perspectra::to_string(p))},
                                {"strategy", strategy_tag},
                                {"summary", result.text},
                                {"keyphrases", keyphrases}}
                       .dump()
                << "\n";
            ++written;
        }
    }
    write_text_file(out_path, out.str());
    std::cout << ordered_json{{"summaries", written}, {"out", out_path}}.dump() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// eval-summ

int cmd_eval_summ(const GlobalOptions& g, const std::string& pred_path, const std::string& ref_path,
                  const std::string& report_path, const std::string& factuality_name,
                  const std::string& embedding_name) {
    const auto cfg = load_config(g);
    perspectra::LlmClient client(cfg.client_config());
    const auto embedding =
        perspectra::resolve_endpoint(cfg, embedding_name, perspectra::EndpointKind::embedding);

    // References: a corpus file or a summaries JSONL, keyed (thread, perspective).
    std::map<std::pair<std::string, std::string>, std::string> refs;
    {
        std::ifstream in(ref_path);
        if (!in) throw perspectra::ParseError("cannot open references file: " + ref_path);
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            json rec;
            try {
                rec = json::parse(line);
            } catch (const json::exception& e) {
                throw perspectra::ParseError(ref_path + ":" + std::to_string(line_no) +
                                             ": invalid JSON: " + e.what());
            }
            if (rec.contains("answers")) {
                const auto t = perspectra::thread_from_json(rec, line_no);
                for (const auto& [p, s] : t.gold_summaries)
                    refs[{t.id, std::string(perspectra::to_string(p))}] = s;
            } else {
                refs[{rec.at("thread_id").get<std::string>(),
                      rec.at("perspective").get<std::string>()}] =
                    rec.at("summary").get<std::string>();
            }
        }
    }

    struct Pair {
        std::string thread_id, perspective, candidate, reference;
    };
    std::vector<Pair> pairs;
    std::size_t skipped = 0;
    {
        std::ifstream in(pred_path);
        if (!in) throw perspectra::ParseError("cannot open predictions file: " + pred_path);
        std::string line;
        while (std::getline(in, line)) {
            if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
            const json rec = json::parse(line);
            Pair pair;
            pair.thread_id = rec.at("thread_id").get<std::string>();
            pair.perspective = rec.at("perspective").get<std::string>();
            pair.candidate = rec.at("summary").get<std::string>();
            auto it = refs.find({pair.thread_id, pair.perspective});
            if (it == refs.end()) {
                ++skipped;
                continue;
            }
            pair.reference = it->second;
            pairs.push_back(std::move(pair));
        }
    }

    perspectra::FactualityScorer factuality = nullptr;
    if (!factuality_name.empty()) {
        const auto fact_endpoint =
            perspectra::resolve_endpoint(cfg, factuality_name, perspectra::EndpointKind::factuality);
        factuality = [&client, fact_endpoint](const std::string& c, const std::string& r) {
            return client.factuality(c, r, fact_endpoint);
        };
    }

    std::vector<std::pair<std::string, std::string>> text_pairs;
    for (const auto& p : pairs) text_pairs.emplace_back(p.candidate, p.reference);
    const auto batch =
        perspectra::evaluate_batch(text_pairs, client.embedder_for(embedding), factuality);

    ordered_json jpairs = ordered_json::array();
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        ordered_json entry{{"thread_id", pairs[i].thread_id},
                           {"perspective", pairs[i].perspective}};
        entry.update(perspectra::metric_report_to_json(batch.reports[i]));
        jpairs.push_back(std::move(entry));
    }
    ordered_json report;
    report["pairs"] = std::move(jpairs);
    report["means"] = perspectra::metric_report_to_json(batch.means);
    report["corpus_bleu"] = batch.corpus_bleu;
    report["embedding_model"] = embedding.model;
    report["skipped"] = skipped;
    report["factuality_warning"] = batch.factuality_warning;
    write_text_file(report_path, report.dump(2) + "\n");
    std::cout << ordered_json{{"pairs", pairs.size()},
                              {"mean_composite", batch.means.composite},
                              {"skipped", skipped},
                              {"report", report_path}}
                     .dump()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// optimize

int cmd_optimize(const GlobalOptions& g, const std::string& split_tag, const std::string& strategy_tag,
                 int iterations, int variants, bool variants_explicit, int minibatch,
                 std::uint64_t seed, int full_eval_period, double prior_weight,
                 const std::string& out_path, const std::string& trace_path,
                 const std::string& task_name, const std::string& meta_name,
                 const std::string& embedding_name, const std::string& meta_template_path,
                 const std::string& registry_flag) {
    const auto cfg = load_config(g);
    const auto corpus = load_store_split(cfg, split_tag);

    perspectra::OptimizerConfig opt;
    opt.iterations = iterations;
    opt.variants_per_iteration = variants;
    opt.variants_override = variants_explicit;
    opt.minibatch_size = minibatch;
    opt.rng_seed = seed;
    opt.full_eval_period = full_eval_period;
    opt.prior_weight = prior_weight;

    perspectra::LlmClient client(cfg.client_config());
    perspectra::OptimizerEnv env;
    env.client = &client;
    env.task_endpoint =
        perspectra::resolve_endpoint(cfg, task_name, perspectra::EndpointKind::generation);
    env.meta_endpoint =
        perspectra::resolve_endpoint(cfg, meta_name, perspectra::EndpointKind::generation);
    env.embedding_endpoint =
        perspectra::resolve_endpoint(cfg, embedding_name, perspectra::EndpointKind::embedding);
    env.base_request = cfg.base_request();
    env.registry = load_registry(cfg, registry_flag);
    if (!meta_template_path.empty()) env.meta_template = read_text_file(meta_template_path);

    const auto program = perspectra::PromptProgram::make(perspectra::parse_strategy(strategy_tag));
    const auto result = perspectra::optimize(program, corpus, std::move(env), opt);

    ordered_json best;
    best["strategy"] = strategy_tag;
    best["instructions"] = result.best.instructions;
    best["dev_score"] = result.dev_score;
    best["candidate_id"] = result.best.id;
    best["origin"] = result.best.origin;
    best["config"] = {{"iterations", iterations}, {"variants", variants},
                      {"minibatch", minibatch},  {"seed", seed},
                      {"full_eval_period", full_eval_period}, {"prior_weight", prior_weight}};
    write_text_file(out_path, best.dump(2) + "\n");

    if (!trace_path.empty()) {
        std::ostringstream trace;
        for (const auto& rec : result.trace)
            trace << perspectra::iteration_record_to_json(rec).dump() << "\n";
        write_text_file(trace_path, trace.str());
    }
    std::cout << ordered_json{{"dev_score", result.dev_score},
                              {"best_candidate", result.best.id},
                              {"out", out_path}}
                     .dump()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// export-sft

int cmd_export_sft(const GlobalOptions& g, const std::string& split_tag,
                   const std::string& strategy_tag, const std::string& out_path,
                   const std::string& registry_flag) {
    const auto cfg = load_config(g);
    const auto corpus = load_store_split(cfg, split_tag);
    const auto registry = load_registry(cfg, registry_flag);
    const auto summary = perspectra::export_sft(
        corpus, perspectra::parse_strategy(strategy_tag), out_path, registry);
    std::cout << ordered_json{{"records", summary.records},
                              {"skipped", summary.skipped},
                              {"out", out_path},
                              {"sidecar", perspectra::sft_sidecar_path(out_path)}}
                     .dump()
              << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"perspectra: perspective-aware CQA summarization toolkit"};
    app.require_subcommand(1);
    GlobalOptions g;
    app.add_option("--config", g.config_path, "Kit config file")
        ->capture_default_str();

    // ingest
    std::string in_input, in_split;
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus file and store it by split");
    ingest->add_option("--input", in_input, "Corpus JSONL file")->required();
    ingest->add_option("--split", in_split, "train|validation|test")->required();

    // stats
    std::string st_split, st_report;
    auto* stats = app.add_subcommand("stats", "Perspective distribution of an ingested split");
    stats->add_option("--split", st_split, "train|validation|test")->required();
    stats->add_option("--report", st_report, "Optional JSON report path");

    // predict-spans
    std::string ps_probs, ps_split, ps_out;
    auto* predict = app.add_subcommand(
        "predict-spans", "Ensemble-average probability inputs and decode perspective spans");
    predict->add_option("--probs", ps_probs,
                        "Directory of probability files, or comma-separated token-probs endpoints")
        ->required();
    predict->add_option("--split", ps_split, "Ingested split providing answer texts")->required();
    predict->add_option("--out", ps_out, "Predicted spans JSONL path")->required();

    // eval-spans
    std::string es_pred, es_gold, es_report;
    auto* evalspans = app.add_subcommand("eval-spans", "Score predicted spans against gold spans");
    evalspans->add_option("--pred", es_pred, "Predicted spans JSONL")->required();
    evalspans->add_option("--gold", es_gold, "Gold corpus JSONL")->required();
    evalspans->add_option("--report", es_report, "Report JSON path")->required();

    // summarize
    std::string su_split, su_strategy = "cot_guide", su_endpoint, su_out, su_prompt, su_spans,
                su_registry;
    auto* summarize = app.add_subcommand("summarize", "Generate per-(thread, perspective) summaries");
    summarize->add_option("--split", su_split, "Ingested split")->required();
    summarize->add_option("--strategy", su_strategy, "vanilla|cot_keyphrase|cot_guide")
        ->capture_default_str();
    summarize->add_option("--endpoint", su_endpoint, "Generation endpoint name");
    summarize->add_option("--out", su_out, "Summaries JSONL path")->required();
    summarize->add_option("--prompt", su_prompt, "Optimized prompt file (best_prompt.json)");
    summarize->add_option("--spans", su_spans, "Predicted spans JSONL (default: gold spans)");
    summarize->add_option("--registry", su_registry, "Guide registry override JSON");

    // eval-summ
    std::string esu_pred, esu_ref, esu_report, esu_fact, esu_embed;
    auto* evalsumm = app.add_subcommand("eval-summ", "Score summaries against references");
    evalsumm->add_option("--pred", esu_pred, "Summaries JSONL")->required();
    evalsumm->add_option("--ref", esu_ref, "Reference corpus or summaries JSONL")->required();
    evalsumm->add_option("--report", esu_report, "Report JSON path")->required();
    evalsumm->add_option("--factuality-endpoint", esu_fact, "Factuality endpoint name");
    evalsumm->add_option("--embedding-endpoint", esu_embed, "Embedding endpoint name");

    // optimize
    std::string op_split = "validation", op_strategy = "cot_guide", op_out, op_trace, op_task,
                op_meta, op_embed, op_meta_template, op_registry;
    int op_iterations = 10, op_variants = 4, op_minibatch = 8, op_full_eval = 5;
    std::uint64_t op_seed = 42;
    double op_prior_weight = 1.0;
    auto* optimize = app.add_subcommand("optimize", "0-shot MIPRO instruction optimization");
    optimize->add_option("--split", op_split, "Dev split")->capture_default_str();
    optimize->add_option("--strategy", op_strategy, "vanilla|cot_keyphrase|cot_guide")
        ->capture_default_str();
    optimize->add_option("--iterations", op_iterations, "Optimization iterations")
        ->capture_default_str();
    auto* variants_opt =
        optimize->add_option("--variants", op_variants, "Prompt variants per iteration (3-5)")
            ->capture_default_str();
    optimize->add_option("--minibatch", op_minibatch, "Minibatch size")->capture_default_str();
    optimize->add_option("--seed", op_seed, "RNG seed")->capture_default_str();
    optimize->add_option("--full-eval-period", op_full_eval, "Full dev re-eval period")
        ->capture_default_str();
    optimize->add_option("--prior-weight", op_prior_weight, "Posterior prior weight")
        ->capture_default_str();
    optimize->add_option("--out", op_out, "Best prompt JSON path")->required();
    optimize->add_option("--trace", op_trace, "Trace JSONL path");
    optimize->add_option("--task-endpoint", op_task, "Generation endpoint for task calls");
    optimize->add_option("--meta-endpoint", op_meta, "Generation endpoint for meta calls");
    optimize->add_option("--embedding-endpoint", op_embed, "Embedding endpoint");
    optimize->add_option("--meta-template", op_meta_template, "Meta prompt template file");
    optimize->add_option("--registry", op_registry, "Guide registry override JSON");

    // export-sft
    std::string sf_split, sf_strategy, sf_out, sf_registry;
    auto* exportsft = app.add_subcommand("export-sft", "Export SFT records and training metadata");
    exportsft->add_option("--split", sf_split, "Ingested split")->required();
    // deliberately no default: the export is only meaningful for a chosen strategy
    exportsft->add_option("--strategy", sf_strategy, "vanilla|cot_keyphrase|cot_guide")->required();
    exportsft->add_option("--out", sf_out, "SFT JSONL path")->required();
    exportsft->add_option("--registry", sf_registry, "Guide registry override JSON");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << ordered_json{{"error", std::string("usage: ") + e.what()}}.dump() << "\n";
        return 2;
    }
    g.config_explicit = app.count("--config") > 0;

    try {
        if (*ingest) return cmd_ingest(g, in_input, in_split);
        if (*stats) return cmd_stats(g, st_split, st_report);
        if (*predict) return cmd_predict_spans(g, ps_probs, ps_split, ps_out);
        if (*evalspans) return cmd_eval_spans(g, es_pred, es_gold, es_report);
        if (*summarize)
            return cmd_summarize(g, su_split, su_strategy, su_endpoint, su_out, su_prompt, su_spans,
                                 su_registry);
        if (*evalsumm)
            return cmd_eval_summ(g, esu_pred, esu_ref, esu_report, esu_fact, esu_embed);
        if (*optimize)
            return cmd_optimize(g, op_split, op_strategy, op_iterations, op_variants,
                                variants_opt->count() > 0, op_minibatch, op_seed, op_full_eval,
                                op_prior_weight, op_out, op_trace, op_task, op_meta, op_embed,
                                op_meta_template, op_registry);
        if (*exportsft) return cmd_export_sft(g, sf_split, sf_strategy, sf_out, sf_registry);
        std::cerr << ordered_json{{"error", "no subcommand"}}.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << ordered_json{{"error", e.what()}}.dump() << "\n";
        return 1;
    }
}
