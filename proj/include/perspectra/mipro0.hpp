#ifndef PERSPECTRA_MIPRO0_HPP
#define PERSPECTRA_MIPRO0_HPP

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "perspectra/config.hpp"
#include "perspectra/corpus.hpp"
#include "perspectra/error.hpp"
#include "perspectra/llmio.hpp"
#include "perspectra/promptkit.hpp"
#include "perspectra/summeval.hpp"

// 0-shot MIPRO-style instruction optimization. Each iteration asks a meta
// model for instruction variants, scores every fresh candidate (plus the
// incumbent) on a seeded minibatch of (thread, perspective) summary tasks
// with the composite metric, and keeps posterior means under a normal-prior
// shrinkage surrogate. Periodically the two posterior leaders are re-scored
// on the full dev split and the incumbent is pinned to the full-dev leader.
// No demonstrations are ever inserted into task prompts; only instruction
// text moves.

namespace perspectra {

struct Candidate {
    int id = 0;
    std::string origin = "seed";  // seed | meta | fallback
    std::map<std::string, std::string> instructions;
    std::vector<std::pair<int, double>> scores;  // (minibatch id, composite mean)
    double posterior_mean = 0.0;
    int eval_count = 0;
    std::optional<double> full_dev;
};

// Shrinkage posterior over noisy minibatch scores: a pseudo-observation of
// weight prior_weight at prior_mean pools with the observed scores.
inline double recompute_posterior(const Candidate& c, double prior_weight, double prior_mean) {
    double sum = 0.0;
    for (const auto& [id, s] : c.scores) sum += s;
    return (prior_weight * prior_mean + sum) / (prior_weight + static_cast<double>(c.eval_count));
}

struct OptimizerConfig {
    int iterations = 10;
    int variants_per_iteration = 4;
    bool variants_override = false;  // allow values outside [3, 5]
    int minibatch_size = 8;
    int full_eval_period = 5;
    std::uint64_t rng_seed = 42;
    double prior_weight = 1.0;
    MetricWeights metric_weights;

    void validate() const {
        if (iterations < 1) throw ValidationError("optimizer: iterations must be >= 1");
        if (minibatch_size < 1) throw ValidationError("optimizer: minibatch_size must be >= 1");
        if (!variants_override && (variants_per_iteration < 3 || variants_per_iteration > 5))
            throw ValidationError(
                "optimizer: variants_per_iteration must be in [3, 5] unless overridden");
        if (variants_per_iteration < 1)
            throw ValidationError("optimizer: variants_per_iteration must be >= 1");
        if (prior_weight <= 0.0) throw ValidationError("optimizer: prior_weight must be > 0");
        metric_weights.validate();
    }
};

// One summary scoring unit.
struct SummTask {
    std::size_t thread_index = 0;
    Perspective perspective = Perspective::Information;
};

struct IterationRecord {
    int iteration = 0;  // 1-based
    int minibatch_id = 0;
    std::vector<std::size_t> minibatch;  // task indices into the dev task list
    std::vector<int> proposed_ids;
    std::vector<std::pair<int, double>> minibatch_scores;  // candidate id -> score
    std::vector<std::pair<int, double>> posteriors;        // candidate id -> posterior
    int incumbent_id = 0;
    double incumbent_score = 0.0;
    std::vector<std::pair<int, double>> full_eval;  // candidate id -> full-dev composite
    std::vector<std::string> warnings;
    bool aborted = false;
};

struct OptimizationResult {
    Candidate best;
    std::vector<IterationRecord> trace;
    double dev_score = 0.0;
};

struct OptimizerEnv {
    LlmClient* client = nullptr;
    EndpointConfig task_endpoint;
    EndpointConfig meta_endpoint;
    EndpointConfig embedding_endpoint;
    GenRequest base_request;  // carries the kit generation defaults
    GuideRegistry registry;
    std::string meta_template;  // empty uses kDefaultMetaPrompt
};

inline constexpr const char* kDefaultMetaPrompt =
    "You are optimizing the instruction slots of a perspective-aware summarization prompt "
    "program. Propose {n_variants} improved variants of the instructions.\n\n"
    "Task: given labeled perspective spans from answers in a medical community QA thread, "
    "the program writes a summary for one perspective (Information, Cause, Suggestion, "
    "Experience, or Question).\n\n"
    "Current instructions (JSON):\n{incumbent}\n\n"
    "Recent scores (composite of ROUGE-L, BLEU, METEOR, BERTScore; higher is better):\n"
    "{history}\n\n"
    "Example dev tasks:\n{examples}\n\n"
    "Return ONLY a JSON array with exactly {n_variants} objects. Each object maps "
    "instruction slot names ({slots}) to replacement instruction text. Omit slots you "
    "would not change.";

namespace detail {

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto mix = [](std::uint64_t h, std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    };
    return mix(mix(seed, a), b);
}

// Deterministic partial Fisher-Yates; avoids std::sample so the draw is
// identical across standard libraries.
inline std::vector<std::size_t> seeded_sample(std::size_t n, std::size_t k, std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    k = std::min(k, n);
    for (std::size_t i = 0; i < k; ++i) {
        const std::size_t j = i + static_cast<std::size_t>(rng() % (n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    return idx;
}

inline const std::array<const char*, 5> kFallbackDirectives = {
    "Keep every clinically relevant detail from the spans.",
    "Prefer short declarative sentences.",
    "Summarize only the answers, never the question itself.",
    "State the perspective's key points before any elaboration.",
    "Do not introduce facts that are absent from the spans.",
};

}  // namespace detail

class Mipro0Optimizer {
public:
    Mipro0Optimizer(PromptProgram program, const Corpus& dev, OptimizerEnv env,
                    OptimizerConfig config)
        : program_(std::move(program)), dev_(dev), env_(std::move(env)), config_(config) {
        config_.validate();
        if (env_.client == nullptr) throw ConfigError("optimizer: no llm client");
        if (env_.meta_template.empty()) env_.meta_template = kDefaultMetaPrompt;
        collect_tasks();
    }

    const std::vector<SummTask>& tasks() const { return tasks_; }

    // Generates one summary for a task with the candidate's instructions and
    // scores it against the reference. Generation failures score 0.
    double score_task(const Candidate& candidate, const SummTask& task,
                      std::vector<std::string>* warnings) const {
        const CqaThread& thread = dev_.threads[task.thread_index];
        std::vector<std::string> span_texts;
        for (const auto& s : thread.gold_spans)
            if (s.label == task.perspective) span_texts.push_back(s.text);
        const std::string& reference = thread.gold_summaries.at(task.perspective);

        PromptProgram prog = program_;
        prog.instruction_slots = candidate.instructions;
        std::string summary;
        try {
            std::vector<std::string> keyphrases;
            if (prog.strategy != Strategy::vanilla) {
                RenderedPrompt kp = build_keyphrase_prompt(span_texts, prog);
                GenRequest req = env_.base_request;
                req.system = kp.system;
                req.user = kp.user;
                keyphrases = parse_keyphrases(env_.client->chat_complete(req, env_.task_endpoint).text)
                                 .items;
            }
            RenderedPrompt sp =
                build_summary_prompt(task.perspective, span_texts, keyphrases, prog, env_.registry);
            GenRequest req = env_.base_request;
            req.system = sp.system;
            req.user = sp.user;
            summary = env_.client->chat_complete(req, env_.task_endpoint).text;
        } catch (const HttpError& e) {
            // A dead endpoint (retry budget spent) aborts the whole scoring
            // pass; an isolated generation failure only zeroes this task.
            if (e.exhausted) throw;
            if (warnings)
                warnings->push_back("task " + thread.id + "/" +
                                    std::string(to_string(task.perspective)) +
                                    " scored 0: " + e.what());
            return 0.0;
        } catch (const std::exception& e) {
            if (warnings)
                warnings->push_back("task " + thread.id + "/" +
                                    std::string(to_string(task.perspective)) +
                                    " scored 0: " + e.what());
            return 0.0;
        }
        TokenEmbedder embedder = env_.client->embedder_for(env_.embedding_endpoint);
        return evaluate_pair(summary, reference, embedder, config_.metric_weights).composite;
    }

    // Mean composite over the given task indices. With a minibatch id the
    // score lands in the candidate's history and moves its posterior.
    double score_candidate(Candidate& candidate, const std::vector<std::size_t>& task_indices,
                           std::optional<int> minibatch_id,
                           std::vector<std::string>* warnings = nullptr) const {
        if (task_indices.empty()) throw ValidationError("score_candidate: empty minibatch");
        double sum = 0.0;
        for (std::size_t ti : task_indices) sum += score_task(candidate, tasks_[ti], warnings);
        const double mean = sum / static_cast<double>(task_indices.size());
        if (minibatch_id) {
            candidate.scores.emplace_back(*minibatch_id, mean);
            candidate.eval_count += 1;
            candidate.posterior_mean = recompute_posterior(candidate, config_.prior_weight, prior_mean_);
        }
        return mean;
    }

    struct Proposals {
        std::vector<std::map<std::string, std::string>> variants;
        std::vector<std::string> origins;  // meta | fallback
        bool unparseable = false;
    };

    // One meta-model call per iteration; under-delivery pads with the
    // deterministic fallback rewrite, over-delivery truncates.
    Proposals propose_variants(const Candidate& incumbent,
                               const std::vector<IterationRecord>& history, int iteration) const {
        const int want = config_.variants_per_iteration;
        std::string prompt = env_.meta_template;
        prompt = replace_all(prompt, "{n_variants}", std::to_string(want));
        prompt = replace_all(prompt, "{incumbent}", nlohmann::json(incumbent.instructions).dump(2));
        prompt = replace_all(prompt, "{history}", history_summary(history));
        prompt = replace_all(prompt, "{examples}", dev_examples());
        prompt = replace_all(prompt, "{slots}", slot_names());

        GenRequest req = env_.base_request;
        req.system = "You improve prompt instructions for a summarization program.";
        req.user = prompt;
        const std::string completion = env_.client->chat_complete(req, env_.meta_endpoint).text;

        Proposals out;
        const auto lb = completion.find('[');
        const auto rb = completion.rfind(']');
        if (lb != std::string::npos && rb != std::string::npos && rb > lb) {
            nlohmann::json arr;
            try {
                arr = nlohmann::json::parse(completion.substr(lb, rb - lb + 1));
            } catch (const nlohmann::json::exception&) {
                arr = nlohmann::json::array();
            }
            if (arr.is_array()) {
                for (const auto& item : arr) {
                    if (static_cast<int>(out.variants.size()) >= want) break;
                    if (!item.is_object()) continue;
                    std::map<std::string, std::string> instructions = incumbent.instructions;
                    bool any = false;
                    for (auto it = item.begin(); it != item.end(); ++it) {
                        if (!it.value().is_string()) continue;
                        instructions[it.key()] = it.value().get<std::string>();
                        any = true;
                    }
                    if (!any) continue;
                    out.variants.push_back(std::move(instructions));
                    out.origins.push_back("meta");
                }
            }
        }
        out.unparseable = out.variants.empty();
        int pad_index = 0;
        while (static_cast<int>(out.variants.size()) < want) {
            out.variants.push_back(fallback_variant(incumbent, iteration, pad_index++));
            out.origins.push_back("fallback");
        }
        return out;
    }

    OptimizationResult run() {
        pool_.clear();
        Candidate seed;
        seed.id = next_id_++;
        seed.origin = "seed";
        seed.instructions = program_.instruction_slots;
        pool_.push_back(std::move(seed));

        std::vector<std::size_t> all(tasks_.size());
        std::iota(all.begin(), all.end(), std::size_t{0});

        // prior_mean comes from the incumbent's first full-dev score.
        pool_[0].full_dev = score_candidate(pool_[0], all, std::nullopt);
        prior_mean_ = *pool_[0].full_dev;
        pool_[0].posterior_mean = recompute_posterior(pool_[0], config_.prior_weight, prior_mean_);

        std::size_t incumbent = 0;
        // The traced incumbent score is the high-water mark of the selected
        // candidate's posterior: leadership only changes on a strict
        // improvement, so the recorded sequence never decreases.
        double incumbent_score = pool_[0].posterior_mean;

        std::vector<IterationRecord> trace;
        for (int iter = 1; iter <= config_.iterations; ++iter) {
            IterationRecord rec;
            rec.iteration = iter;
            rec.minibatch_id = iter;

            // An aborted iteration must leave optimizer state untouched.
            const std::vector<Candidate> pool_snapshot = pool_;
            const int next_id_snapshot = next_id_;
            const std::size_t incumbent_snapshot = incumbent;
            const double incumbent_score_snapshot = incumbent_score;

            try {
                Proposals proposals = propose_variants(pool_[incumbent], trace, iter);
                if (proposals.unparseable)
                    rec.warnings.push_back("meta completion unparseable; used fallback variants only");

                std::vector<std::size_t> to_score;
                for (std::size_t v = 0; v < proposals.variants.size(); ++v) {
                    const std::size_t idx = intern_candidate(std::move(proposals.variants[v]),
                                                             proposals.origins[v]);
                    rec.proposed_ids.push_back(pool_[idx].id);
                    to_score.push_back(idx);
                }
                to_score.push_back(incumbent);
                std::sort(to_score.begin(), to_score.end());
                to_score.erase(std::unique(to_score.begin(), to_score.end()), to_score.end());

                rec.minibatch = detail::seeded_sample(
                    tasks_.size(), static_cast<std::size_t>(config_.minibatch_size),
                    detail::mix_seed(config_.rng_seed, static_cast<std::uint64_t>(iter),
                                     static_cast<std::uint64_t>(dev_.split)));

                for (std::size_t idx : to_score) {
                    const double s = score_candidate(pool_[idx], rec.minibatch, rec.minibatch_id,
                                                     &rec.warnings);
                    rec.minibatch_scores.emplace_back(pool_[idx].id, s);
                }
                for (const auto& c : pool_) rec.posteriors.emplace_back(c.id, c.posterior_mean);

                std::size_t best = best_posterior_index();
                if (pool_[best].posterior_mean > incumbent_score) {
                    incumbent = best;
                    incumbent_score = pool_[best].posterior_mean;
                }

                if (config_.full_eval_period > 0 && iter % config_.full_eval_period == 0) {
                    for (std::size_t idx : top_two_by_posterior()) {
                        pool_[idx].full_dev = score_candidate(pool_[idx], all, std::nullopt);
                        rec.full_eval.emplace_back(pool_[idx].id, *pool_[idx].full_dev);
                    }
                    std::size_t leader = incumbent;
                    double leader_dev = -1.0;
                    for (std::size_t idx : top_two_by_posterior()) {
                        if (pool_[idx].full_dev && *pool_[idx].full_dev > leader_dev) {
                            leader = idx;
                            leader_dev = *pool_[idx].full_dev;
                        }
                    }
                    incumbent = leader;
                    incumbent_score = std::max(incumbent_score, pool_[leader].posterior_mean);
                }
            } catch (const HttpError& e) {
                pool_ = pool_snapshot;
                next_id_ = next_id_snapshot;
                incumbent = incumbent_snapshot;
                incumbent_score = incumbent_score_snapshot;
                rec = IterationRecord{};
                rec.iteration = iter;
                rec.minibatch_id = iter;
                rec.aborted = true;
                rec.warnings.push_back(std::string("iteration aborted: ") + e.what());
            }

            rec.incumbent_id = pool_[incumbent].id;
            rec.incumbent_score = incumbent_score;
            trace.push_back(std::move(rec));
        }

        if (!pool_[incumbent].full_dev)
            pool_[incumbent].full_dev = score_candidate(pool_[incumbent], all, std::nullopt);

        OptimizationResult result;
        result.best = pool_[incumbent];
        result.trace = std::move(trace);
        result.dev_score = *pool_[incumbent].full_dev;
        return result;
    }

    double prior_mean() const { return prior_mean_; }

private:
    void collect_tasks() {
        for (std::size_t i = 0; i < dev_.threads.size(); ++i) {
            const CqaThread& t = dev_.threads[i];
            for (const auto& [p, summary] : t.gold_summaries) {
                bool has_span = false;
                for (const auto& s : t.gold_spans) has_span = has_span || s.label == p;
                if (has_span) tasks_.push_back(SummTask{i, p});
            }
        }
        if (tasks_.empty())
            throw ValidationError("optimizer: dev corpus has no (thread, perspective) tasks "
                                  "with gold summaries");
    }

    // Same instructions, same candidate: evidence pools instead of forking.
    std::size_t intern_candidate(std::map<std::string, std::string> instructions,
                                 std::string origin) {
        for (std::size_t i = 0; i < pool_.size(); ++i)
            if (pool_[i].instructions == instructions) return i;
        Candidate c;
        c.id = next_id_++;
        c.origin = std::move(origin);
        c.instructions = std::move(instructions);
        c.posterior_mean = recompute_posterior(c, config_.prior_weight, prior_mean_);
        pool_.push_back(std::move(c));
        return pool_.size() - 1;
    }

    std::size_t best_posterior_index() const {
        std::size_t best = 0;
        for (std::size_t i = 1; i < pool_.size(); ++i)
            if (pool_[i].posterior_mean > pool_[best].posterior_mean) best = i;
        return best;
    }

    std::vector<std::size_t> top_two_by_posterior() const {
        std::vector<std::size_t> idx(pool_.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            return pool_[a].posterior_mean > pool_[b].posterior_mean;
        });
        if (idx.size() > 2) idx.resize(2);
        return idx;
    }

    std::map<std::string, std::string> fallback_variant(const Candidate& incumbent, int iteration,
                                                        int k) const {
        auto instructions = incumbent.instructions;
        const auto& directives = detail::kFallbackDirectives;
        const char* directive =
            directives[static_cast<std::size_t>(iteration * 31 + k) % directives.size()];
        const char* slot =
            program_.strategy == Strategy::vanilla ? kStepVanilla : kStepSummaryGeneration;
        instructions[slot] += std::string(" ") + directive;
        return instructions;
    }

    std::string history_summary(const std::vector<IterationRecord>& history) const {
        if (history.empty()) return "(no iterations yet)";
        std::string out;
        const std::size_t from = history.size() > 5 ? history.size() - 5 : 0;
        for (std::size_t i = from; i < history.size(); ++i) {
            const auto& rec = history[i];
            out += "iteration " + std::to_string(rec.iteration) + ": incumbent candidate " +
                   std::to_string(rec.incumbent_id) + " at " +
                   std::to_string(rec.incumbent_score) + "\n";
        }
        return out;
    }

    std::string dev_examples() const {
        // Fixed-seed sample, independent of the iteration index.
        const auto picks = detail::seeded_sample(tasks_.size(), 2, config_.rng_seed);
        std::string out;
        for (std::size_t ti : picks) {
            const SummTask& task = tasks_[ti];
            const CqaThread& thread = dev_.threads[task.thread_index];
            out += "- perspective " + std::string(to_string(task.perspective)) + "; spans:";
            for (const auto& s : thread.gold_spans)
                if (s.label == task.perspective) out += " \"" + s.text + "\"";
            out += "; reference: \"" + thread.gold_summaries.at(task.perspective) + "\"\n";
        }
        return out;
    }

    std::string slot_names() const {
        std::string out;
        for (const auto& [name, text] : program_.instruction_slots) {
            if (!out.empty()) out += ", ";
            out += name;
        }
        return out;
    }

    PromptProgram program_;
    const Corpus& dev_;
    OptimizerEnv env_;
    OptimizerConfig config_;
    std::vector<SummTask> tasks_;
    std::vector<Candidate> pool_;
    double prior_mean_ = 0.0;
    int next_id_ = 0;
};

inline OptimizationResult optimize(const PromptProgram& program, const Corpus& dev,
                                   OptimizerEnv env, const OptimizerConfig& config) {
    return Mipro0Optimizer(program, dev, std::move(env), config).run();
}

inline nlohmann::ordered_json iteration_record_to_json(const IterationRecord& rec) {
    nlohmann::ordered_json j;
    j["iteration"] = rec.iteration;
    j["minibatch_id"] = rec.minibatch_id;
    j["minibatch_tasks"] = rec.minibatch;
    j["proposed_ids"] = rec.proposed_ids;
    auto pairs = [](const std::vector<std::pair<int, double>>& v) {
        auto arr = nlohmann::ordered_json::array();
        for (const auto& [id, s] : v) arr.push_back({{"candidate", id}, {"score", s}});
        return arr;
    };
    j["minibatch_scores"] = pairs(rec.minibatch_scores);
    j["posteriors"] = pairs(rec.posteriors);
    j["incumbent_id"] = rec.incumbent_id;
    j["incumbent_score"] = rec.incumbent_score;
    j["full_eval"] = pairs(rec.full_eval);
    j["warnings"] = rec.warnings;
    j["aborted"] = rec.aborted;
    return j;
}

}  // namespace perspectra

#endif
