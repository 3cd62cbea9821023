#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reasonforge/errors.hpp"
#include "reasonforge/postproc.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/hash.hpp"
#include "reasonforge/util/jsonl.hpp"
#include "reasonforge/util/rng.hpp"

namespace forge::metrics {

// Unbiased estimator: 1 - C(n-c, k) / C(n, k), evaluated as a product of
// k factors each in [0,1] so nothing overflows for n well past 10^4.
inline double pass_at_k(std::size_t n, std::size_t c, std::size_t k) {
    if (k < 1) throw ValidationError("pass_at_k: k must be >= 1");
    if (k > n) throw ValidationError("pass_at_k: k > n (" + std::to_string(k) + " > " +
                                     std::to_string(n) + ")");
    if (c > n) throw ValidationError("pass_at_k: c > n");
    if (k > n - c) return 1.0;  // every k-subset hits a correct sample
    double ratio = 1.0;
    for (std::size_t i = 0; i < k; ++i)
        ratio *= static_cast<double>(n - c - i) / static_cast<double>(n - i);
    return 1.0 - ratio;
}

struct PoolSample {
    std::size_t sample_index = 0;
    bool is_correct = false;
    std::optional<postproc::Judgment> judgment;
    std::optional<std::uint64_t> critique_trace_length;
};

struct SamplePool {
    std::string question_id;
    Difficulty difficulty = Difficulty::unknown;
    std::vector<PoolSample> samples;

    std::size_t correct_count() const {
        std::size_t c = 0;
        for (const auto& s : samples) c += s.is_correct ? 1 : 0;
        return c;
    }
};

inline json pool_to_json(const SamplePool& pool) {
    json samples = json::array();
    for (const auto& s : pool.samples) {
        json js{{"sample_index", s.sample_index}, {"is_correct", s.is_correct}};
        if (s.judgment) js["judgment"] = postproc::to_string(*s.judgment);
        if (s.critique_trace_length) js["critique_trace_length"] = *s.critique_trace_length;
        samples.push_back(std::move(js));
    }
    return json{{"question_id", pool.question_id},
                {"difficulty", to_string(pool.difficulty)},
                {"samples", std::move(samples)}};
}

inline SamplePool pool_from_json(const json& j) {
    SamplePool pool;
    pool.question_id = j.at("question_id").get<std::string>();
    if (j.contains("difficulty"))
        pool.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
    std::map<std::size_t, bool> seen;
    for (const auto& js : j.at("samples")) {
        PoolSample s;
        s.sample_index = js.at("sample_index").get<std::size_t>();
        s.is_correct = js.at("is_correct").get<bool>();
        if (js.contains("judgment") && !js.at("judgment").is_null())
            s.judgment = postproc::judgment_from_string(js.at("judgment").get<std::string>());
        if (js.contains("critique_trace_length") && !js.at("critique_trace_length").is_null())
            s.critique_trace_length = js.at("critique_trace_length").get<std::uint64_t>();
        if (!seen.emplace(s.sample_index, true).second)
            throw ValidationError("pool " + pool.question_id + ": duplicate sample_index " +
                                  std::to_string(s.sample_index));
        pool.samples.push_back(std::move(s));
    }
    return pool;
}

namespace detail {

inline void require_judged(const SamplePool& pool, const PoolSample& s) {
    if (!s.judgment || !s.critique_trace_length)
        throw ValidationError("pool " + pool.question_id + ": sample " +
                              std::to_string(s.sample_index) +
                              " lacks a judgment or trace length required for selection");
}

inline void check_positions(const SamplePool& pool, const std::vector<std::size_t>& k_positions) {
    if (k_positions.empty())
        throw ValidationError("selection over pool " + pool.question_id + ": empty index list");
    for (std::size_t p : k_positions)
        if (p >= pool.samples.size())
            throw ValidationError("selection over pool " + pool.question_id +
                                  ": position out of range");
}

}  // namespace detail

// Positions index into pool.samples (draw order). Among right-judged samples
// the shortest critique trace wins, ties to the smallest sample_index; when
// nothing is judged right the same shortest-trace rule runs over all k drawn
// samples so selection stays total.
inline std::size_t select_candidate_position(const SamplePool& pool,
                                             const std::vector<std::size_t>& k_positions) {
    detail::check_positions(pool, k_positions);
    for (std::size_t p : k_positions) detail::require_judged(pool, pool.samples[p]);

    auto better = [&](std::size_t a, std::size_t b) {  // true: a beats b
        const PoolSample& sa = pool.samples[a];
        const PoolSample& sb = pool.samples[b];
        if (*sa.critique_trace_length != *sb.critique_trace_length)
            return *sa.critique_trace_length < *sb.critique_trace_length;
        return sa.sample_index < sb.sample_index;
    };

    std::optional<std::size_t> best_right;
    std::optional<std::size_t> best_any;
    for (std::size_t p : k_positions) {
        if (!best_any || better(p, *best_any)) best_any = p;
        if (pool.samples[p].judgment == postproc::Judgment::right)
            if (!best_right || better(p, *best_right)) best_right = p;
    }
    return best_right ? *best_right : *best_any;
}

inline std::size_t select_candidate(const SamplePool& pool,
                                    const std::vector<std::size_t>& k_positions) {
    return pool.samples[select_candidate_position(pool, k_positions)].sample_index;
}

// Baseline: uniform over the right-judged drawn samples, or over all k drawn
// samples when none is judged right.
inline std::size_t select_random_position(const SamplePool& pool,
                                          const std::vector<std::size_t>& k_positions, Rng& rng) {
    detail::check_positions(pool, k_positions);
    for (std::size_t p : k_positions) detail::require_judged(pool, pool.samples[p]);
    std::vector<std::size_t> right;
    for (std::size_t p : k_positions)
        if (pool.samples[p].judgment == postproc::Judgment::right) right.push_back(p);
    const std::vector<std::size_t>& candidates = right.empty() ? k_positions : right;
    return candidates[rng.bounded(candidates.size())];
}

inline std::size_t select_random(const SamplePool& pool,
                                 const std::vector<std::size_t>& k_positions,
                                 std::uint64_t seed) {
    Rng rng(seed);
    return pool.samples[select_random_position(pool, k_positions, rng)].sample_index;
}

enum class SelectionStrategy { shortest_trace, random_pick };

inline std::string to_string(SelectionStrategy s) {
    return s == SelectionStrategy::shortest_trace ? "shortest" : "random";
}

inline SelectionStrategy strategy_from_string(const std::string& s) {
    if (s == "shortest") return SelectionStrategy::shortest_trace;
    if (s == "random") return SelectionStrategy::random_pick;
    throw ValidationError("unknown selection strategy: " + s + " (expected shortest or random)");
}

namespace detail {

inline std::uint64_t pool_stream_seed(std::uint64_t seed, const std::string& question_id) {
    return combine_hash(mix64(seed), fnv1a64(question_id));
}

}  // namespace detail

// The k-subsets drawn for one question: n_resamples rows of k positions into
// pool.samples, in draw order. Seeded per question id, so reordering the pool
// list never changes any question's draws; n_resamples = 1 means the single
// deterministic "first k samples" evaluation rather than a random draw.
inline std::vector<std::vector<std::size_t>> selection_draws(const SamplePool& pool,
                                                             std::size_t k,
                                                             std::size_t n_resamples,
                                                             std::uint64_t seed) {
    if (k < 1) throw ValidationError("selection: k must be >= 1");
    if (pool.samples.size() < k)
        throw ValidationError("pool " + pool.question_id + " has " +
                              std::to_string(pool.samples.size()) + " samples, fewer than k=" +
                              std::to_string(k));
    if (n_resamples < 1) throw ValidationError("selection: n_resamples must be >= 1");

    std::vector<std::vector<std::size_t>> draws;
    draws.reserve(n_resamples);
    if (n_resamples == 1) {
        std::vector<std::size_t> first(k);
        for (std::size_t i = 0; i < k; ++i) first[i] = i;
        draws.push_back(std::move(first));
        return draws;
    }
    Rng rng(detail::pool_stream_seed(seed, pool.question_id));
    for (std::size_t r = 0; r < n_resamples; ++r)
        draws.push_back(rng.sample_without_replacement(pool.samples.size(), k));
    return draws;
}

struct SelectionScore {
    double value = 0.0;            // mean over draws then questions
    double fallback_fraction = 0.0;  // draws decided by the no-right fallback
};

inline SelectionScore pass1_select_at_k_detail(const std::vector<SamplePool>& pools,
                                               std::size_t k, SelectionStrategy strategy,
                                               std::size_t n_resamples, std::uint64_t seed) {
    if (pools.empty()) throw ValidationError("selection: no pools");
    double question_sum = 0.0;
    std::size_t fallback_draws = 0;
    std::size_t total_draws = 0;

    for (const auto& pool : pools) {
        const auto draws = selection_draws(pool, k, n_resamples, seed);
        // Independent stream for the random baseline so the draws above are
        // identical whichever strategy runs.
        Rng pick_rng(mix64(detail::pool_stream_seed(seed, pool.question_id) ^
                           0x7069636b6b657973ULL));
        double draw_sum = 0.0;
        for (const auto& draw : draws) {
            const std::size_t pos = strategy == SelectionStrategy::shortest_trace
                                        ? select_candidate_position(pool, draw)
                                        : select_random_position(pool, draw, pick_rng);
            draw_sum += pool.samples[pos].is_correct ? 1.0 : 0.0;
            bool any_right = false;
            for (std::size_t p : draw)
                if (pool.samples[p].judgment == postproc::Judgment::right) any_right = true;
            if (!any_right) ++fallback_draws;
            ++total_draws;
        }
        question_sum += draw_sum / static_cast<double>(draws.size());
    }

    SelectionScore score;
    score.value = question_sum / static_cast<double>(pools.size());
    score.fallback_fraction =
        total_draws == 0 ? 0.0 : static_cast<double>(fallback_draws) / total_draws;
    return score;
}

inline double pass1_select_at_k(const std::vector<SamplePool>& pools, std::size_t k,
                                SelectionStrategy strategy, std::size_t n_resamples,
                                std::uint64_t seed) {
    return pass1_select_at_k_detail(pools, k, strategy, n_resamples, seed).value;
}

// All-or-nothing critique accuracy: a question counts only if the judgment
// matches ground truth on every one of its first k samples.
inline double critique_accuracy_all_k(const std::vector<SamplePool>& pools, std::size_t k) {
    if (pools.empty()) throw ValidationError("critique_accuracy_all_k: no pools");
    if (k < 1) throw ValidationError("critique_accuracy_all_k: k must be >= 1");
    double sum = 0.0;
    for (const auto& pool : pools) {
        if (pool.samples.size() < k)
            throw ValidationError("pool " + pool.question_id + " has " +
                                  std::to_string(pool.samples.size()) +
                                  " samples, fewer than k=" + std::to_string(k));
        bool all_match = true;
        for (std::size_t i = 0; i < k; ++i) {
            const PoolSample& s = pool.samples[i];
            if (!s.judgment)
                throw ValidationError("pool " + pool.question_id + ": sample " +
                                      std::to_string(s.sample_index) + " lacks a judgment");
            const bool judged_right = *s.judgment == postproc::Judgment::right;
            if (judged_right != s.is_correct) all_match = false;
        }
        sum += all_match ? 1.0 : 0.0;
    }
    return sum / static_cast<double>(pools.size());
}

struct LabeledJudgment {
    postproc::Judgment judgment = postproc::Judgment::wrong;
    bool ground_truth_correct = false;
};

// Per-solution accuracy over pooled correct/incorrect pairs.
inline double pairwise_critique_accuracy(const std::vector<LabeledJudgment>& labeled) {
    if (labeled.empty()) throw ValidationError("pairwise_critique_accuracy: empty input");
    std::size_t matched = 0;
    for (const auto& item : labeled)
        if ((item.judgment == postproc::Judgment::right) == item.ground_truth_correct) ++matched;
    return static_cast<double>(matched) / static_cast<double>(labeled.size());
}

struct GapRow {
    std::size_t k = 0;
    double pass_at_1 = 0.0;
    double select_at_k = 0.0;
    double pass_at_k = 0.0;
};

// Mean over questions of the estimator at a given k.
inline double mean_pass_at_k(const std::vector<SamplePool>& pools, std::size_t k) {
    if (pools.empty()) throw ValidationError("mean_pass_at_k: no pools");
    double sum = 0.0;
    for (const auto& pool : pools) sum += pass_at_k(pool.samples.size(), pool.correct_count(), k);
    return sum / static_cast<double>(pools.size());
}

inline std::vector<GapRow> gap_curves(const std::vector<SamplePool>& pools, std::size_t k_max,
                                      SelectionStrategy strategy = SelectionStrategy::shortest_trace,
                                      std::size_t n_resamples = 100, std::uint64_t seed = 1) {
    if (k_max < 1) throw ValidationError("gap_curves: k_max must be >= 1");
    const double p1 = mean_pass_at_k(pools, 1);
    std::vector<GapRow> rows;
    rows.reserve(k_max);
    for (std::size_t k = 1; k <= k_max; ++k) {
        GapRow row;
        row.k = k;
        row.pass_at_1 = p1;
        row.select_at_k = pass1_select_at_k(pools, k, strategy, n_resamples, seed);
        row.pass_at_k = mean_pass_at_k(pools, k);
        rows.push_back(row);
    }
    return rows;
}

namespace detail {

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace detail

inline std::string gap_curves_csv(const std::vector<GapRow>& rows) {
    std::string out = "k,pass_at_1,pass_at_1_select_at_k,pass_at_k\n";
    for (const auto& r : rows) {
        out += std::to_string(r.k);
        out.push_back(',');
        out += detail::format_double(r.pass_at_1);
        out.push_back(',');
        out += detail::format_double(r.select_at_k);
        out.push_back(',');
        out += detail::format_double(r.pass_at_k);
        out.push_back('\n');
    }
    return out;
}

struct ReportOptions {
    std::size_t k = 10;
    SelectionStrategy strategy = SelectionStrategy::shortest_trace;
    std::size_t n_resamples = 100;
    std::uint64_t seed = 1;
};

constexpr int kReportSchemaVersion = 1;

namespace detail {

inline json bucket_metrics(const std::vector<SamplePool>& pools, const ReportOptions& opts) {
    std::size_t n_samples = 0;
    for (const auto& p : pools) n_samples += p.samples.size();
    const SelectionScore sel =
        pass1_select_at_k_detail(pools, opts.k, opts.strategy, opts.n_resamples, opts.seed);
    return json{{"pass_at_1", mean_pass_at_k(pools, 1)},
                {"pass_at_k", mean_pass_at_k(pools, opts.k)},
                {"pass_at_1_select_at_k", sel.value},
                {"selection_fallback_fraction", sel.fallback_fraction},
                {"critique_accuracy_all_k", critique_accuracy_all_k(pools, opts.k)},
                {"n_questions", pools.size()},
                {"n_samples", n_samples}};
}

}  // namespace detail

// Question-bucketed report. Questions without a difficulty label appear only
// in the overall row. The selection fallback (no right-judged sample in a
// draw) is surfaced per bucket because it changes what the number means.
inline json build_report(const std::vector<SamplePool>& pools, const ReportOptions& opts) {
    if (pools.empty()) throw ValidationError("build_report: no pools");
    json report{{"schema_version", kReportSchemaVersion},
                {"k", opts.k},
                {"strategy", to_string(opts.strategy)},
                {"n_resamples", opts.n_resamples},
                {"seed", opts.seed},
                {"selection_fallback",
                 "when no drawn sample is judged right, the shortest-trace rule (or the random "
                 "baseline) runs over all k drawn samples"}};
    report["overall"] = detail::bucket_metrics(pools, opts);

    json by_difficulty = json::object();
    for (Difficulty d : {Difficulty::easy, Difficulty::medium, Difficulty::hard}) {
        std::vector<SamplePool> bucket;
        for (const auto& p : pools)
            if (p.difficulty == d) bucket.push_back(p);
        if (!bucket.empty()) by_difficulty[to_string(d)] = detail::bucket_metrics(bucket, opts);
    }
    report["by_difficulty"] = std::move(by_difficulty);
    return report;
}

}  // namespace forge::metrics
