#ifndef PERSPECTRA_SFTPREP_HPP
#define PERSPECTRA_SFTPREP_HPP

#include <array>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perspectra/corpus.hpp"
#include "perspectra/error.hpp"
#include "perspectra/promptkit.hpp"

// Supervised fine-tuning export: one chat-format record per (thread,
// perspective-with-summary), with the gold reference summary as the
// assistant turn. The keyphrase step cannot be replayed offline, so the user
// turn is the no-keyphrase rendering of the summary prompt; each record's
// meta says so. Training itself is out of scope; the sidecar records the
// intended training configuration.

namespace perspectra {

struct SftMessage {
    std::string role;
    std::string content;
};

struct SftRecord {
    std::array<SftMessage, 3> messages;  // system, user, assistant
    std::string thread_id;
    Perspective perspective = Perspective::Information;
    Strategy strategy = Strategy::cot_guide;
};

struct ExportSummary {
    std::size_t records = 0;
    std::size_t skipped = 0;
};

inline nlohmann::ordered_json sft_record_to_json(const SftRecord& rec) {
    nlohmann::ordered_json j;
    auto messages = nlohmann::ordered_json::array();
    for (const auto& m : rec.messages)
        messages.push_back({{"role", m.role}, {"content", m.content}});
    j["messages"] = std::move(messages);
    j["meta"] = {{"thread_id", rec.thread_id},
                 {"perspective", std::string(to_string(rec.perspective))},
                 {"strategy", std::string(to_string(rec.strategy))},
                 {"keyphrases_omitted", true}};
    return j;
}

inline std::vector<SftRecord> build_sft_records(const Corpus& corpus, Strategy strategy,
                                                const GuideRegistry& registry,
                                                ExportSummary& summary) {
    std::vector<SftRecord> records;
    for (const auto& thread : corpus.threads) {
        for (const auto& [perspective, reference] : thread.gold_summaries) {
            std::vector<std::string> span_texts;
            for (const auto& s : thread.gold_spans)
                if (s.label == perspective) span_texts.push_back(s.text);
            if (span_texts.empty()) {
                ++summary.skipped;
                continue;
            }
            PromptProgram program = PromptProgram::make(strategy);
            RenderedPrompt prompt =
                build_summary_prompt(perspective, span_texts, {}, program, registry);
            SftRecord rec;
            rec.messages = {SftMessage{"system", prompt.system},
                            SftMessage{"user", prompt.user},
                            SftMessage{"assistant", reference}};
            rec.thread_id = thread.id;
            rec.perspective = perspective;
            rec.strategy = strategy;
            records.push_back(std::move(rec));
            ++summary.records;
        }
    }
    return records;
}

inline std::string sft_sidecar_path(const std::string& out_path) {
    const std::string suffix = ".jsonl";
    if (out_path.size() > suffix.size() &&
        out_path.compare(out_path.size() - suffix.size(), suffix.size(), suffix) == 0)
        return out_path.substr(0, out_path.size() - suffix.size()) + ".meta.json";
    return out_path + ".meta.json";
}

inline nlohmann::ordered_json sft_sidecar_json(Strategy strategy, const ExportSummary& summary) {
    nlohmann::ordered_json meta;
    meta["base_model"] = "Meta-Llama-3-8B-Instruct";
    meta["method"] = "LoRA";
    meta["optimizer"] = "AdamW";
    meta["learning_rate"] = 1e-4;
    meta["batch_size"] = 32;
    meta["epochs"] = 2;
    meta["generation_defaults"] = {{"max_tokens", 256}, {"temperature", 0.1}, {"seed", 42}};
    meta["strategy"] = std::string(to_string(strategy));
    meta["records"] = summary.records;
    meta["skipped"] = summary.skipped;
    return meta;
}

// Writes line-delimited records plus the training-metadata sidecar.
inline ExportSummary export_sft(const Corpus& corpus, Strategy strategy,
                                const std::string& out_path,
                                const GuideRegistry& registry = GuideRegistry{}) {
    ExportSummary summary;
    const std::vector<SftRecord> records = build_sft_records(corpus, strategy, registry, summary);
    std::ofstream out(out_path);
    if (!out) throw ParseError("cannot write SFT file: " + out_path);
    for (const auto& rec : records) out << sft_record_to_json(rec).dump() << "\n";
    out.close();

    std::ofstream side(sft_sidecar_path(out_path));
    if (!side) throw ParseError("cannot write SFT sidecar: " + sft_sidecar_path(out_path));
    side << sft_sidecar_json(strategy, summary).dump(2) << "\n";
    return summary;
}

}  // namespace perspectra

#endif
