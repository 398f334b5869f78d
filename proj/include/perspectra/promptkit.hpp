#ifndef PERSPECTRA_PROMPTKIT_HPP
#define PERSPECTRA_PROMPTKIT_HPP

#include <array>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "perspectra/error.hpp"
#include "perspectra/perspective.hpp"

// The four-step CoT prompt program: keyphrase extraction, keyphrase
// integration, guide integration, summary generation. Rendering is pure and
// deterministic; instruction slots are plain text the optimizer may rewrite.

namespace perspectra {

enum class Strategy { vanilla, cot_keyphrase, cot_guide };

inline std::string_view to_string(Strategy s) {
    switch (s) {
        case Strategy::vanilla: return "vanilla";
        case Strategy::cot_keyphrase: return "cot_keyphrase";
        case Strategy::cot_guide: return "cot_guide";
    }
    return "vanilla";
}

inline Strategy parse_strategy(std::string_view s) {
    if (s == "vanilla") return Strategy::vanilla;
    if (s == "cot_keyphrase") return Strategy::cot_keyphrase;
    if (s == "cot_guide") return Strategy::cot_guide;
    throw ValidationError("unknown strategy: '" + std::string(s) +
                          "' (expected vanilla|cot_keyphrase|cot_guide)");
}

// Instruction slot names, one per CoT step plus the vanilla baseline.
inline constexpr const char* kStepKeyphraseExtraction = "keyphrase_extraction";
inline constexpr const char* kStepKeyphraseIntegration = "keyphrase_integration";
inline constexpr const char* kStepGuideIntegration = "guide_integration";
inline constexpr const char* kStepSummaryGeneration = "summary_generation";
inline constexpr const char* kStepVanilla = "vanilla_summary";

// Per-perspective prompt context: tone, anchor start-phrase, definition.
// `source` distinguishes entries carrying the task's canonical wording
// ("task") from kit-authored defaults ("kit-default").
struct GuideEntry {
    Perspective perspective = Perspective::Information;
    std::string tone;
    std::string anchor;
    std::string definition;
    std::string source = "kit-default";

    void validate() const {
        if (tone.empty() || anchor.empty() || definition.empty())
            throw ValidationError("guide entry for " + std::string(to_string(perspective)) +
                                  " must have non-empty tone, anchor, and definition");
    }
};

class GuideRegistry {
public:
    GuideRegistry() : entries_(defaults()) {}

    const GuideEntry& entry(Perspective p) const {
        return entries_[static_cast<std::size_t>(p)];
    }

    void set(GuideEntry entry) {
        entry.validate();
        entries_[static_cast<std::size_t>(entry.perspective)] = std::move(entry);
    }

    // Override file: JSON object mapping label -> {tone, anchor, definition}.
    void apply_overrides(const nlohmann::json& overrides) {
        if (!overrides.is_object())
            throw ParseError("guide registry override must be a JSON object keyed by label");
        for (auto it = overrides.begin(); it != overrides.end(); ++it) {
            GuideEntry e;
            e.perspective = parse_perspective(it.key());
            const auto& v = it.value();
            if (!v.is_object() || !v.contains("tone") || !v.contains("anchor") ||
                !v.contains("definition"))
                throw ParseError("guide registry entry for '" + it.key() +
                                 "' needs tone, anchor, and definition");
            e.tone = v["tone"].get<std::string>();
            e.anchor = v["anchor"].get<std::string>();
            e.definition = v["definition"].get<std::string>();
            e.source = "override";
            set(std::move(e));
        }
    }

    void apply_overrides_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ParseError("cannot open guide registry file: " + path);
        nlohmann::json j;
        try {
            in >> j;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError("guide registry file " + path + ": invalid JSON: " + e.what());
        }
        apply_overrides(j);
    }

    static std::array<GuideEntry, kNumPerspectives> defaults() {
        // Information and Question anchors/tones come from the task
        // description; every other field is a kit-authored default and is
        // flagged as such so invented text never masquerades as quoted text.
        std::array<GuideEntry, kNumPerspectives> d;
        d[0] = {Perspective::Information, "informative", "For information purposes...",
                "Conveys general medical knowledge or factual content about a condition, "
                "treatment, or drug, independent of any single person's situation.",
                "task"};
        d[1] = {Perspective::Cause, "explanatory", "The likely cause is...",
                "Explains the origin, reason, or trigger behind the medical concern or "
                "symptom under discussion.",
                "kit-default"};
        d[2] = {Perspective::Suggestion, "advisory", "It is suggested...",
                "Recommends an action, treatment, remedy, or course of care addressing the "
                "concern raised in the question.",
                "kit-default"};
        d[3] = {Perspective::Experience, "personal", "In personal experience...",
                "Relates a first-hand account of symptoms, treatments, or outcomes the "
                "answerer has lived through.",
                "kit-default"};
        d[4] = {Perspective::Question, "understanding-seeking", "It is inquired...",
                "Raises a further query or seeks clarification about the medical concern "
                "rather than answering it.",
                "task"};
        return d;
    }

private:
    std::array<GuideEntry, kNumPerspectives> entries_;
};

inline GuideEntry guide_for(Perspective p, const GuideRegistry& registry = GuideRegistry{}) {
    return registry.entry(p);
}

inline std::map<std::string, std::string> default_instructions() {
    return {
        {kStepKeyphraseExtraction,
         "Identify and extract the most important keyphrases from the perspective spans "
         "below. A keyphrase is a short phrase carrying essential medical information."},
        {kStepKeyphraseIntegration,
         "Incorporate the following keyphrases when generating the summary, preserving the "
         "key information they carry:"},
        {kStepGuideIntegration,
         "Start with <anchor> texts. Use the <tone> tone of this perspective. Consider the "
         "following definition when generating the summary: <perspective definition>."},
        {kStepSummaryGeneration,
         "Focus on <perspective>-specific aspects in your summary. Now generate a concise "
         "and coherent summary."},
        {kStepVanilla,
         "Generate a concise and coherent summary of the <perspective> perspective expressed "
         "in the answer spans below."},
    };
}

inline constexpr const char* kDefaultSystemPrompt =
    "You are an assistant that summarizes answers from medical community "
    "question-answering threads, one perspective at a time. Ground every statement in the "
    "provided spans.";

// The four-step CoT template with its mutable instruction slots, extracted
// keyphrases, and the bound guide entry.
struct PromptProgram {
    Strategy strategy = Strategy::cot_guide;
    std::map<std::string, std::string> instruction_slots = default_instructions();
    std::vector<std::string> keyphrases;
    std::optional<GuideEntry> guide;

    static PromptProgram make(Strategy s) {
        PromptProgram p;
        p.strategy = s;
        return p;
    }

    const std::string& slot(const std::string& name) const {
        auto it = instruction_slots.find(name);
        if (it == instruction_slots.end())
            throw ValidationError("prompt program has no instruction slot '" + name + "'");
        return it->second;
    }

    void validate() const {
        if (strategy == Strategy::vanilla && (!keyphrases.empty() || guide.has_value()))
            throw ValidationError("vanilla programs forbid keyphrases and guide entries");
        if (strategy == Strategy::cot_guide && guide.has_value()) guide->validate();
    }
};

struct RenderedPrompt {
    std::string system;
    std::string user;
    std::string step;
};

inline std::string replace_all(std::string text, std::string_view needle, std::string_view repl) {
    std::size_t pos = 0;
    while ((pos = text.find(needle, pos)) != std::string::npos) {
        text.replace(pos, needle.size(), repl);
        pos += repl.size();
    }
    return text;
}

inline constexpr std::array<std::string_view, 4> kPlaceholders = {
    "<anchor>", "<tone>", "<perspective definition>", "<perspective>"};

inline bool has_unresolved_placeholders(std::string_view text) {
    for (std::string_view p : kPlaceholders)
        if (text.find(p) != std::string_view::npos) return true;
    return false;
}

// Keyphrase list wire format: one item per line prefixed "- ". A leading '-'
// or '\' in the item itself is escaped with a backslash so parsing stays
// unambiguous; items are single-line (newlines collapse to spaces).
inline std::string format_keyphrase_list(const std::vector<std::string>& items) {
    std::string out;
    for (const auto& item : items) {
        std::string body = replace_all(replace_all(item, "\r\n", " "), "\n", " ");
        if (!body.empty() && (body[0] == '-' || body[0] == '\\')) body.insert(body.begin(), '\\');
        out += "- " + body + "\n";
    }
    return out;
}

struct ParsedKeyphrases {
    std::vector<std::string> items;
    bool warning = false;  // set when non-empty input yielded nothing parseable
};

inline std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(first, last - first + 1));
}

inline ParsedKeyphrases parse_keyphrases(std::string_view completion) {
    ParsedKeyphrases result;
    std::vector<std::string> seen_lower;
    std::istringstream in{std::string(completion)};
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        if (t.rfind("- ", 0) != 0) continue;
        std::string item = trim(t.substr(2));
        if (!item.empty() && item[0] == '\\') item.erase(item.begin());
        if (item.empty()) continue;
        std::string lower;
        for (char c : item) lower += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c;
        bool dup = false;
        for (const auto& s : seen_lower) dup = dup || s == lower;
        if (dup) continue;
        seen_lower.push_back(lower);
        result.items.push_back(std::move(item));
    }
    if (result.items.empty() && !trim(completion).empty()) result.warning = true;
    return result;
}

namespace detail {

inline std::string numbered_spans(const std::vector<std::string>& spans) {
    std::string out;
    for (std::size_t i = 0; i < spans.size(); ++i)
        out += std::to_string(i + 1) + ". " + spans[i] + "\n";
    return out;
}

}  // namespace detail

// Step 1: ask for keyphrases over the identified perspective spans.
inline RenderedPrompt build_keyphrase_prompt(const std::vector<std::string>& spans,
                                             const PromptProgram& program) {
    if (spans.empty()) throw ValidationError("build_keyphrase_prompt: no spans given");
    if (program.strategy == Strategy::vanilla)
        throw ValidationError("build_keyphrase_prompt: vanilla strategy has no keyphrase step");
    std::string user = program.slot(kStepKeyphraseExtraction);
    user += "\n\nPerspective spans:\n" + detail::numbered_spans(spans);
    user +=
        "\nReturn only the keyphrases, one per line, each line starting with \"- \". Escape a "
        "leading '-' or '\\' in a keyphrase with a backslash.";
    return RenderedPrompt{kDefaultSystemPrompt, std::move(user), kStepKeyphraseExtraction};
}

// Steps 2-4 (or the vanilla baseline): render the summary request for one
// perspective. For cot_guide the user text carries, in order: the spans, the
// keyphrase integration step, the guide block, and the closing summary step.
inline RenderedPrompt build_summary_prompt(Perspective perspective,
                                           const std::vector<std::string>& spans,
                                           const std::vector<std::string>& keyphrases,
                                           const PromptProgram& program,
                                           const GuideRegistry& registry = GuideRegistry{}) {
    if (spans.empty()) throw ValidationError("build_summary_prompt: no spans given");
    program.validate();
    if (program.strategy == Strategy::vanilla && !keyphrases.empty())
        throw ValidationError("build_summary_prompt: vanilla strategy forbids keyphrases");
    const std::vector<std::string>& bound_keyphrases =
        keyphrases.empty() ? program.keyphrases : keyphrases;
    const std::string label(to_string(perspective));

    // Placeholder resolution is checked over the instruction-derived segments
    // only; span and keyphrase payloads are user data and pass through as-is.
    std::string rendered_slots;
    std::string user;
    if (program.strategy == Strategy::vanilla) {
        std::string head = replace_all(program.slot(kStepVanilla), "<perspective>", label);
        rendered_slots += head;
        user = std::move(head);
        user += "\n\nAnswer spans:\n" + detail::numbered_spans(spans);
    } else {
        user = label + " perspective spans:\n" + detail::numbered_spans(spans);
        if (!bound_keyphrases.empty()) {
            rendered_slots += program.slot(kStepKeyphraseIntegration);
            user += "\n" + program.slot(kStepKeyphraseIntegration) + "\n" +
                    format_keyphrase_list(bound_keyphrases);
        }
        if (program.strategy == Strategy::cot_guide) {
            const GuideEntry guide =
                (program.guide && program.guide->perspective == perspective)
                    ? *program.guide
                    : registry.entry(perspective);
            guide.validate();
            std::string block = program.slot(kStepGuideIntegration);
            block = replace_all(block, "<anchor>", guide.anchor);
            block = replace_all(block, "<tone>", guide.tone);
            block = replace_all(block, "<perspective definition>", guide.definition);
            rendered_slots += block;
            user += "\n" + block + "\n";
        }
        std::string closing = replace_all(program.slot(kStepSummaryGeneration), "<perspective>", label);
        rendered_slots += closing;
        user += "\n" + closing;
    }

    if (user.empty() || has_unresolved_placeholders(rendered_slots))
        throw ValidationError("build_summary_prompt: unresolved template placeholders");
    return RenderedPrompt{kDefaultSystemPrompt, std::move(user), kStepSummaryGeneration};
}

}  // namespace perspectra

#endif
