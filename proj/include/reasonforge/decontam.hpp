#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "reasonforge/corpus.hpp"
#include "reasonforge/errors.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/hash.hpp"
#include "reasonforge/util/parallel.hpp"

namespace forge::corpus {

struct BenchmarkItem {
    std::string name;  // benchmark suite, e.g. "livecodebench"
    std::string id;
    std::string statement;
};

inline BenchmarkItem benchmark_item_from_json(const json& j, const std::string& ctx) {
    return BenchmarkItem{require_string(j, "name", ctx), require_string(j, "id", ctx),
                         require_string(j, "statement", ctx)};
}

inline std::vector<BenchmarkItem> load_benchmark_items(const std::string& path) {
    std::vector<BenchmarkItem> out;
    for_each_jsonl(path, [&](std::size_t line, const json& obj) {
        out.push_back(benchmark_item_from_json(obj, path + ":" + std::to_string(line)));
    });
    return out;
}

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<double> embed(const std::string& text) = 0;
};

class JudgeProvider {
public:
    virtual ~JudgeProvider() = default;
    // true = the two statements describe the same problem
    virtual bool equivalent(const std::string& question_statement,
                            const std::string& benchmark_statement) = 0;
};

enum class JudgeDecision { equivalent, distinct, not_screened };

inline std::string to_string(JudgeDecision d) {
    switch (d) {
        case JudgeDecision::equivalent: return "equivalent";
        case JudgeDecision::distinct: return "distinct";
        case JudgeDecision::not_screened: return "not_screened";
    }
    return "not_screened";
}

struct ContaminationVerdict {
    std::string question_id;
    std::optional<std::pair<std::string, std::string>> matched_benchmark_item;  // (name, id)
    double cosine_score = 0.0;
    JudgeDecision judge_decision = JudgeDecision::not_screened;
    bool removed = false;
};

inline json verdict_to_json(const ContaminationVerdict& v) {
    json j{{"question_id", v.question_id},
           {"cosine_score", v.cosine_score},
           {"judge_decision", to_string(v.judge_decision)},
           {"removed", v.removed}};
    if (v.matched_benchmark_item)
        j["matched_benchmark_item"] = json{{"name", v.matched_benchmark_item->first},
                                           {"id", v.matched_benchmark_item->second}};
    else
        j["matched_benchmark_item"] = nullptr;
    return j;
}

// Cosine similarity; nullopt when either vector has zero norm (undefined).
inline std::optional<double> cosine(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) return std::nullopt;
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return std::nullopt;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

// Deterministic offline embedder: hashed character trigram counts of the
// normalized statement. Identical statements embed identically; unrelated
// ones land far apart. Good enough to drive the screening protocol without
// a model endpoint.
class NgramHashEmbedder : public EmbeddingProvider {
public:
    explicit NgramHashEmbedder(std::size_t dims = 256) : dims_(dims) {}

    std::vector<double> embed(const std::string& text) override {
        const std::string norm = normalize_statement(text);
        std::vector<double> v(dims_, 0.0);
        if (norm.size() < 3) {
            if (!norm.empty()) v[fnv1a64(norm) % dims_] += 1.0;
            return v;
        }
        for (std::size_t i = 0; i + 3 <= norm.size(); ++i)
            v[fnv1a64(std::string_view(norm).substr(i, 3)) % dims_] += 1.0;
        return v;
    }

private:
    std::size_t dims_;
};

// Offline judge: equivalent iff the normalized statements are identical.
// Conservative stand-in for an LLM judge.
class ExactMatchJudge : public JudgeProvider {
public:
    bool equivalent(const std::string& q, const std::string& b) override {
        return normalize_statement(q) == normalize_statement(b);
    }
};

struct DecontaminationResult {
    std::vector<Question> retained;
    std::vector<Question> removed;
    std::vector<ContaminationVerdict> verdicts;
};

struct DecontaminateOptions {
    double screen_threshold = 0.7;
    std::size_t jobs = 4;  // bounded in-flight limit for provider calls
    // Progress hook, called once per question in input order as soon as its
    // verdict is final; serves as the partial-progress checkpoint on abort.
    std::function<void(const ContaminationVerdict&)> on_verdict;
    std::function<void(const std::string&)> log;
};

// For each question, find the benchmark item with the highest embedding
// cosine; at or above the screen threshold the pair goes to the judge, and
// the question is removed iff the judge calls it equivalent. One verdict per
// question; verdicts partition the input.
inline DecontaminationResult decontaminate(const std::vector<Question>& questions,
                                           const std::vector<BenchmarkItem>& benchmark_items,
                                           EmbeddingProvider& embedder, JudgeProvider& judge,
                                           const DecontaminateOptions& opts = {}) {
    if (!(opts.screen_threshold >= -1.0 && opts.screen_threshold <= 1.0))
        throw ValidationError("decontaminate: screen_threshold must be in [-1, 1]");

    auto log = [&](const std::string& msg) {
        if (opts.log) opts.log(msg);
    };

    std::vector<std::vector<double>> bench_vecs = parallel_map_ordered<std::vector<double>>(
        benchmark_items.size(), opts.jobs,
        [&](std::size_t i) { return embedder.embed(benchmark_items[i].statement); });
    std::vector<std::vector<double>> question_vecs = parallel_map_ordered<std::vector<double>>(
        questions.size(), opts.jobs,
        [&](std::size_t i) { return embedder.embed(questions[i].statement); });

    struct Screen {
        std::optional<std::size_t> best_item;
        double best_score = 0.0;
        bool screened = false;
    };
    std::vector<Screen> screens(questions.size());
    for (std::size_t qi = 0; qi < questions.size(); ++qi) {
        Screen s;
        bool any_defined = false;
        for (std::size_t bi = 0; bi < benchmark_items.size(); ++bi) {
            const auto c = cosine(question_vecs[qi], bench_vecs[bi]);
            if (!c) continue;
            if (!any_defined || *c > s.best_score) {
                s.best_score = *c;
                s.best_item = bi;
            }
            any_defined = true;
        }
        if (!any_defined) {
            if (!benchmark_items.empty())
                log("decontaminate: cosine undefined for question '" + questions[qi].id +
                    "', treating as not_screened");
        } else {
            s.screened = s.best_score >= opts.screen_threshold;
        }
        screens[qi] = std::move(s);
    }

    // Judge calls run with bounded in-flight parallelism, chunk by chunk in
    // input order; each chunk's verdicts are committed before the next chunk
    // starts, so a provider abort leaves a usable partial checkpoint.
    DecontaminationResult result;
    const std::size_t chunk = std::max<std::size_t>(opts.jobs, 1);
    for (std::size_t base = 0; base < questions.size(); base += chunk) {
        const std::size_t end = std::min(questions.size(), base + chunk);
        std::vector<std::size_t> to_judge;
        for (std::size_t qi = base; qi < end; ++qi)
            if (screens[qi].screened) to_judge.push_back(qi);
        std::vector<char> answers;
        try {
            answers = parallel_map_ordered<char>(to_judge.size(), opts.jobs, [&](std::size_t k) {
                const std::size_t qi = to_judge[k];
                const auto& item = benchmark_items[*screens[qi].best_item];
                return judge.equivalent(questions[qi].statement, item.statement) ? char(1)
                                                                                 : char(0);
            });
        } catch (const std::exception& e) {
            throw ProviderError(std::string("decontaminate: judge provider failed after ") +
                                std::to_string(result.verdicts.size()) +
                                " committed verdicts: " + e.what());
        }
        std::size_t next_judged = 0;
        for (std::size_t qi = base; qi < end; ++qi) {
            ContaminationVerdict v;
            v.question_id = questions[qi].id;
            const Screen& s = screens[qi];
            if (s.best_item) {
                const auto& item = benchmark_items[*s.best_item];
                v.matched_benchmark_item = std::make_pair(item.name, item.id);
                v.cosine_score = s.best_score;
            }
            if (!s.screened) {
                v.judge_decision = JudgeDecision::not_screened;
            } else if (answers[next_judged++] != 0) {
                v.judge_decision = JudgeDecision::equivalent;
                v.removed = true;
            } else {
                v.judge_decision = JudgeDecision::distinct;
            }
            if (v.removed)
                result.removed.push_back(questions[qi]);
            else
                result.retained.push_back(questions[qi]);
            result.verdicts.push_back(v);
            if (opts.on_verdict) opts.on_verdict(result.verdicts.back());
        }
    }
    return result;
}

}  // namespace forge::corpus
