// Command-line front end: one subcommand per pipeline stage, plus the
// orchestrated pipeline itself, dataset emission, and benchmark utilities.
// Exit codes: 0 ok, 2 validation, 3 provider, 4 sandbox, 1 anything else.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "reasonforge/bench.hpp"
#include "reasonforge/corpus.hpp"
#include "reasonforge/decontam.hpp"
#include "reasonforge/errors.hpp"
#include "reasonforge/exec.hpp"
#include "reasonforge/http_provider.hpp"
#include "reasonforge/llm_client.hpp"
#include "reasonforge/llm_judge.hpp"
#include "reasonforge/metrics.hpp"
#include "reasonforge/mock_provider.hpp"
#include "reasonforge/pipeline.hpp"
#include "reasonforge/postproc.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/fs.hpp"
#include "reasonforge/util/jsonl.hpp"

namespace {

using forge::json;

struct ProviderOpts {
    std::string kind = "mock";
    std::string script;   // canned-response script for the mock provider
    std::string profile;  // provider profile JSON for the http provider
    std::string model = "default";
    std::size_t jobs = 4;
};

void add_provider_flags(CLI::App* cmd, ProviderOpts& p) {
    cmd->add_option("--provider", p.kind, "Completion provider: mock or http")
        ->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--script", p.script, "Mock provider response script (JSON)");
    cmd->add_option("--profile", p.profile, "HTTP provider profile (JSON)");
    cmd->add_option("--model", p.model, "Model name passed to the provider");
    cmd->add_option("--jobs", p.jobs, "Concurrent provider requests");
}

std::unique_ptr<forge::llm::CompletionProvider> make_provider(const ProviderOpts& p) {
    if (p.kind == "http") {
        if (p.profile.empty())
            throw forge::ValidationError("--profile is required with --provider http");
        std::ifstream in(p.profile);
        if (!in) throw forge::ValidationError("cannot open provider profile " + p.profile);
        json j = json::parse(in);
        return std::make_unique<forge::llm::HttpProvider>(
            forge::llm::HttpProviderConfig::from_json(j));
    }
    if (!p.script.empty())
        return std::make_unique<forge::llm::MockProvider>(
            forge::llm::MockScript::load_file(p.script));
    return std::make_unique<forge::llm::MockProvider>();
}

forge::llm::GenerateOptions gen_opts(const ProviderOpts& p) {
    forge::llm::GenerateOptions g;
    g.model = p.model;
    g.jobs = p.jobs;
    return g;
}

void print_summary(const json& j) { std::cout << j.dump() << "\n"; }

// ---- subcommand bodies ----

int cmd_dedup(const std::string& in, const std::string& out, const std::string& clusters,
              double threshold) {
    const auto questions = forge::load_questions(in);
    const auto result = forge::corpus::dedup(questions, threshold);
    forge::save_questions(out, result.retained);
    if (!clusters.empty()) {
        forge::JsonlWriter w(clusters);
        for (const auto& c : result.clusters) w.write(forge::corpus::cluster_to_json(c));
    }
    print_summary(json{{"in", questions.size()},
                       {"retained", result.retained.size()},
                       {"removed", questions.size() - result.retained.size()},
                       {"clusters", result.clusters.size()}});
    return 0;
}

int cmd_decontaminate(const std::string& in, const std::string& bench_path, double screen,
                      std::size_t embed_dims, const std::string& out,
                      const std::string& verdicts_path, const std::string& removed_path,
                      const ProviderOpts& popts) {
    const auto questions = forge::load_questions(in);
    const auto items = forge::corpus::load_benchmark_items(bench_path);
    forge::corpus::NgramHashEmbedder embedder(embed_dims);
    auto provider = make_provider(popts);
    forge::llm::CompletionJudge judge(*provider, gen_opts(popts));
    forge::corpus::DecontaminateOptions opts;
    opts.screen_threshold = screen;
    opts.jobs = popts.jobs;
    const auto result = forge::corpus::decontaminate(questions, items, embedder, judge, opts);
    forge::save_questions(out, result.retained);
    if (!verdicts_path.empty()) {
        forge::JsonlWriter w(verdicts_path);
        for (const auto& v : result.verdicts) w.write(forge::corpus::verdict_to_json(v));
    }
    if (!removed_path.empty()) forge::save_questions(removed_path, result.removed);
    print_summary(json{{"in", questions.size()},
                       {"retained", result.retained.size()},
                       {"removed", result.removed.size()},
                       {"benchmark_items", items.size()}});
    return 0;
}

struct SamplingOpts {
    int n = 1;
    std::uint64_t seed = 42;
    double temperature = 0.6;
    double top_p = 0.95;
    int max_new_tokens = 0;  // filled per command
};

int cmd_generate(const std::string& questions_path, const std::string& out,
                 const std::vector<std::string>& langs, const SamplingOpts& s,
                 const ProviderOpts& popts) {
    const auto questions = forge::load_questions(questions_path);
    std::vector<forge::CodeLanguage> languages;
    for (const auto& l : langs) languages.push_back(forge::language_from_string(l));
    if (languages.empty()) languages.push_back(forge::CodeLanguage::python);
    auto provider = make_provider(popts);
    forge::JsonlWriter w(out);
    std::size_t rows = 0;
    for (const auto& q : questions) {
        for (std::size_t li = 0; li < languages.size(); ++li) {
            forge::llm::SamplingParams params;
            params.temperature = s.temperature;
            params.top_p = s.top_p;
            params.max_new_tokens = s.max_new_tokens;
            params.n_samples = s.n;
            params.seed = s.seed;
            const auto responses = forge::llm::generate(
                forge::llm::render_solution_prompt(q, languages[li]), params, *provider,
                gen_opts(popts));
            const std::size_t base = li * static_cast<std::size_t>(s.n);
            for (std::size_t i = 0; i < responses.size(); ++i) {
                forge::pipeline::detail::RawRow r{q.id, base + i, languages[li],
                                                  responses[i].text,
                                                  responses[i].finish_reason};
                w.write(forge::pipeline::detail::raw_row_to_json(r));
                ++rows;
            }
            w.flush();
        }
    }
    print_summary(json{{"questions", questions.size()}, {"rows", rows}});
    return 0;
}

int cmd_critique(const std::string& questions_path, const std::string& solutions_path,
                 const std::string& out, const SamplingOpts& s, const ProviderOpts& popts) {
    const auto questions = forge::load_questions(questions_path);
    std::map<std::string, const forge::Question*> by_id;
    for (const auto& q : questions) by_id[q.id] = &q;
    const auto solutions = forge::read_jsonl(solutions_path);
    auto provider = make_provider(popts);
    forge::JsonlWriter w(out);
    std::size_t rows = 0;
    for (const auto& srow : solutions) {
        const std::string qid = srow.at("question_id").get<std::string>();
        auto qit = by_id.find(qid);
        if (qit == by_id.end())
            throw forge::ValidationError("critique: unknown question id '" + qid + "'");
        forge::llm::SamplingParams params;
        params.temperature = s.temperature;
        params.top_p = s.top_p;
        params.max_new_tokens = s.max_new_tokens;
        params.n_samples = 1;
        params.seed = s.seed;
        const auto responses = forge::llm::generate(
            forge::llm::render_critique_prompt(*qit->second,
                                               srow.at("solution_source").get<std::string>()),
            params, *provider, gen_opts(popts));
        forge::pipeline::detail::RawRow r{
            qid, srow.at("sample_index").get<std::size_t>(),
            forge::language_from_string(srow.at("code_language").get<std::string>()),
            responses.front().text, responses.front().finish_reason};
        w.write(forge::pipeline::detail::raw_row_to_json(r));
        ++rows;
    }
    print_summary(json{{"in", solutions.size()}, {"rows", rows}});
    return 0;
}

int cmd_postprocess(const std::string& kind, const std::string& in, const std::string& out,
                    std::string rejects) {
    if (rejects.empty()) rejects = out + ".rejected.jsonl";
    const auto rows = forge::read_jsonl(in);
    forge::JsonlWriter accepted(out);
    forge::JsonlWriter rejected(rejects);
    std::size_t n_ok = 0, n_bad = 0;
    for (const auto& row : rows) {
        const auto r = forge::pipeline::detail::raw_row_from_json(row);
        forge::llm::RawResponse raw;
        raw.text = r.text;
        raw.finish_reason = r.finish_reason;
        if (kind == "solution") {
            const auto parse = forge::postproc::parse_solution_response(raw, r.code_language);
            if (parse.outcome.accepted) {
                accepted.write(forge::postproc::solution_record(r.question_id, r.sample_index,
                                                                *parse.solution));
                ++n_ok;
            } else {
                rejected.write(forge::postproc::rejection_record(r.question_id, r.sample_index,
                                                                 kind, r.code_language,
                                                                 *parse.outcome.reject_reason));
                ++n_bad;
            }
        } else {
            const auto parse = forge::postproc::parse_critique_response(raw);
            if (parse.outcome.accepted) {
                accepted.write(forge::postproc::critique_record(r.question_id, r.sample_index,
                                                                *parse.critique));
                ++n_ok;
            } else {
                rejected.write(forge::postproc::rejection_record(r.question_id, r.sample_index,
                                                                 kind, r.code_language,
                                                                 *parse.outcome.reject_reason));
                ++n_bad;
            }
        }
    }
    print_summary(json{{"in", rows.size()}, {"accepted", n_ok}, {"rejected", n_bad}});
    return 0;
}

int cmd_execute(const std::string& solutions_path, const std::string& questions_path,
                std::uint64_t seed, double timeout, double compile_timeout,
                std::uint64_t memory_limit, std::size_t jobs, const std::string& out) {
    const auto questions = forge::load_questions(questions_path);
    std::vector<forge::exec::SolutionRecord> records;
    for (const auto& row : forge::read_jsonl(solutions_path))
        records.push_back(forge::exec::solution_record_from_json(row));
    forge::exec::SandboxPolicy policy;
    policy.per_test_timeout_s = timeout;
    policy.compile_timeout_s = compile_timeout;
    policy.memory_limit_bytes = memory_limit;
    const auto outcome = forge::exec::evaluate_batch(questions, records, policy, seed, jobs,
                                                     forge::bench::harness_synthesizer());
    forge::JsonlWriter w(out);
    for (const auto& r : outcome.results) w.write(forge::exec::result_to_json(r));
    print_summary(json{{"in", records.size()},
                       {"executed", outcome.results.size()},
                       {"skipped_questions", outcome.skipped_question_ids},
                       {"toolchain", forge::exec::toolchain_metadata()}});
    return 0;
}

int cmd_evaluate(const std::string& pools_path, std::size_t k, const std::string& strategy,
                 std::size_t resamples, std::uint64_t seed, const std::string& out,
                 const std::string& curves_out, std::size_t k_max) {
    std::vector<forge::metrics::SamplePool> pools;
    for (const auto& row : forge::read_jsonl(pools_path))
        pools.push_back(forge::metrics::pool_from_json(row));
    forge::metrics::ReportOptions opts;
    opts.k = k;
    opts.strategy = forge::metrics::strategy_from_string(strategy);
    opts.n_resamples = resamples;
    opts.seed = seed;
    const json report = forge::metrics::build_report(pools, opts);
    {
        std::ofstream f(out, std::ios::binary | std::ios::trunc);
        if (!f) throw forge::ValidationError("cannot write " + out);
        f << report.dump(2) << "\n";
    }
    if (!curves_out.empty()) {
        const auto rows =
            forge::metrics::gap_curves(pools, k_max, opts.strategy, opts.n_resamples, opts.seed);
        std::ofstream f(curves_out, std::ios::binary | std::ios::trunc);
        if (!f) throw forge::ValidationError("cannot write " + curves_out);
        f << forge::metrics::gap_curves_csv(rows);
    }
    print_summary(json{{"pools", pools.size()},
                       {"report", out},
                       {"pass_at_1", report.at("overall").at("pass_at_1")},
                       {"pass_at_k", report.at("overall").at("pass_at_k")},
                       {"pass_at_1_select_at_k", report.at("overall").at("pass_at_1_select_at_k")}});
    return 0;
}

int cmd_dataset(const std::string& questions_path, const std::string& solutions_path,
                const std::string& critiques_path, const std::string& results_path,
                const std::string& out) {
    const auto tables =
        forge::pipeline::load_tables(questions_path, solutions_path, critiques_path, results_path);
    const std::size_t triples = forge::pipeline::emit_dataset(tables, out);
    print_summary(json{{"solutions", tables.solutions.size()}, {"triples", triples}});
    return 0;
}

int cmd_bench_validate(const std::string& in, bool lenient, int from_tag, int to_tag) {
    const auto report = forge::bench::load_benchmark(in, lenient);
    for (const auto& e : report.errors) std::cerr << e << "\n";
    std::size_t atcoder = 0, leetcode = 0;
    for (const auto& r : report.records)
        (r.venue == forge::bench::Venue::atcoder ? atcoder : leetcode) += 1;
    json summary{{"records", report.records.size()},
                 {"atcoder", atcoder},
                 {"leetcode", leetcode},
                 {"errors", report.errors.size()}};
    if (from_tag >= 0 && to_tag >= 0)
        summary["in_date_range"] =
            forge::bench::filter_by_date(report.records, from_tag, to_tag).size();
    print_summary(summary);
    return 0;
}

int cmd_bench_harness(const std::string& in, const std::string& record_id,
                      const std::string& solution_path, const std::string& lang,
                      const std::string& out) {
    const auto report = forge::bench::load_benchmark(in, false);
    const forge::bench::BenchmarkRecord* record = nullptr;
    for (const auto& r : report.records)
        if (r.problem_id == record_id) record = &r;
    if (!record) throw forge::ValidationError("no record with problem_id '" + record_id + "'");
    const std::string solution = forge::read_file(solution_path);
    const auto harness =
        forge::bench::build_harness(*record, solution, forge::language_from_string(lang));
    std::ofstream f(out, std::ios::binary | std::ios::trunc);
    if (!f) throw forge::ValidationError("cannot write " + out);
    f << harness.source;
    json summary{{"record", record_id}, {"valid", harness.valid}, {"out", out}};
    if (!harness.valid) summary["invalid_reason"] = harness.invalid_reason;
    print_summary(summary);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Code-reasoning data pipeline: dedup, decontaminate, generate, filter, "
                 "execute, and score candidate solutions"};
    app.require_subcommand(1);
    int rc = 0;

    // dedup
    {
        auto* cmd = app.add_subcommand("dedup", "Collapse near-duplicate questions");
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto clusters = std::make_shared<std::string>();
        auto threshold = std::make_shared<double>(0.9);
        cmd->add_option("--in", *in, "Questions JSONL")->required();
        cmd->add_option("--out", *out, "Retained questions JSONL")->required();
        cmd->add_option("--clusters", *clusters, "Cluster report JSONL");
        cmd->add_option("--threshold", *threshold, "Similarity threshold");
        cmd->callback([=, &rc] { rc = cmd_dedup(*in, *out, *clusters, *threshold); });
    }

    // decontaminate
    {
        auto* cmd = app.add_subcommand("decontaminate",
                                       "Remove questions overlapping benchmark problems");
        auto in = std::make_shared<std::string>();
        auto bench = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto verdicts = std::make_shared<std::string>();
        auto removed = std::make_shared<std::string>();
        auto screen = std::make_shared<double>(0.7);
        auto dims = std::make_shared<std::size_t>(256);
        auto popts = std::make_shared<ProviderOpts>();
        cmd->add_option("--in", *in, "Questions JSONL")->required();
        cmd->add_option("--bench", *bench, "Benchmark items JSONL")->required();
        cmd->add_option("--out", *out, "Retained questions JSONL")->required();
        cmd->add_option("--verdicts", *verdicts, "Per-question verdict JSONL");
        cmd->add_option("--removed", *removed, "Removed questions JSONL");
        cmd->add_option("--screen", *screen, "Cosine screen threshold");
        cmd->add_option("--embed-dims", *dims, "Hashed n-gram embedding dimensions");
        add_provider_flags(cmd, *popts);
        cmd->callback([=, &rc] {
            rc = cmd_decontaminate(*in, *bench, *screen, *dims, *out, *verdicts, *removed, *popts);
        });
    }

    // generate
    {
        auto* cmd = app.add_subcommand("generate", "Sample candidate solutions per question");
        auto questions = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto langs = std::make_shared<std::vector<std::string>>();
        auto s = std::make_shared<SamplingOpts>();
        auto popts = std::make_shared<ProviderOpts>();
        s->max_new_tokens = forge::llm::kSolutionMaxNewTokens;
        s->n = 4;
        cmd->add_option("--questions", *questions, "Questions JSONL")->required();
        cmd->add_option("--out", *out, "Raw responses JSONL")->required();
        cmd->add_option("--lang", *langs, "Languages to sample (python, cpp)")
            ->check(CLI::IsMember({"python", "cpp"}));
        cmd->add_option("--n", s->n, "Samples per question per language");
        cmd->add_option("--seed", s->seed, "Sampling seed");
        cmd->add_option("--temperature", s->temperature, "Sampling temperature");
        cmd->add_option("--top-p", s->top_p, "Nucleus sampling mass");
        cmd->add_option("--max-new-tokens", s->max_new_tokens, "Completion token budget");
        add_provider_flags(cmd, *popts);
        cmd->callback([=, &rc] { rc = cmd_generate(*questions, *out, *langs, *s, *popts); });
    }

    // postprocess
    {
        auto* cmd = app.add_subcommand("postprocess", "Filter raw responses into records");
        auto kind = std::make_shared<std::string>();
        auto in = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto rejects = std::make_shared<std::string>();
        cmd->add_option("--kind", *kind, "Record type: solution or critique")
            ->required()
            ->check(CLI::IsMember({"solution", "critique"}));
        cmd->add_option("--in", *in, "Raw responses JSONL")->required();
        cmd->add_option("--out", *out, "Accepted records JSONL")->required();
        cmd->add_option("--rejects", *rejects,
                        "Rejection sidecar JSONL (default: <out>.rejected.jsonl)");
        cmd->callback([=, &rc] { rc = cmd_postprocess(*kind, *in, *out, *rejects); });
    }

    // critique
    {
        auto* cmd = app.add_subcommand("critique", "Sample one critique per solution");
        auto questions = std::make_shared<std::string>();
        auto solutions = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto s = std::make_shared<SamplingOpts>();
        auto popts = std::make_shared<ProviderOpts>();
        s->max_new_tokens = forge::llm::kCritiqueMaxNewTokens;
        cmd->add_option("--questions", *questions, "Questions JSONL")->required();
        cmd->add_option("--solutions", *solutions, "Accepted solutions JSONL")->required();
        cmd->add_option("--out", *out, "Raw critiques JSONL")->required();
        cmd->add_option("--seed", s->seed, "Sampling seed");
        cmd->add_option("--temperature", s->temperature, "Sampling temperature");
        cmd->add_option("--top-p", s->top_p, "Nucleus sampling mass");
        cmd->add_option("--max-new-tokens", s->max_new_tokens, "Completion token budget");
        add_provider_flags(cmd, *popts);
        cmd->callback([=, &rc] { rc = cmd_critique(*questions, *solutions, *out, *s, *popts); });
    }

    // execute
    {
        auto* cmd = app.add_subcommand("execute", "Run solutions against selected unit tests");
        auto solutions = std::make_shared<std::string>();
        auto questions = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto seed = std::make_shared<std::uint64_t>(42);
        auto timeout = std::make_shared<double>(10.0);
        auto compile_timeout = std::make_shared<double>(60.0);
        auto memory = std::make_shared<std::uint64_t>(1ULL << 30);
        auto jobs = std::make_shared<std::size_t>(8);
        cmd->add_option("--solutions", *solutions, "Accepted solutions JSONL")->required();
        cmd->add_option("--questions", *questions, "Questions JSONL")->required();
        cmd->add_option("--seed", *seed, "Test selection seed");
        cmd->add_option("--timeout", *timeout, "Per-test timeout (seconds)");
        cmd->add_option("--compile-timeout", *compile_timeout, "Compile timeout (seconds)");
        cmd->add_option("--memory-limit", *memory, "Per-process memory limit (bytes)");
        cmd->add_option("--jobs", *jobs, "Parallel workers");
        cmd->add_option("--out", *out, "Execution results JSONL")->required();
        cmd->callback([=, &rc] {
            rc = cmd_execute(*solutions, *questions, *seed, *timeout, *compile_timeout, *memory,
                             *jobs, *out);
        });
    }

    // evaluate
    {
        auto* cmd = app.add_subcommand("evaluate", "Score sample pools and write a report");
        auto pools = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        auto curves_out = std::make_shared<std::string>();
        auto strategy = std::make_shared<std::string>("shortest");
        auto k = std::make_shared<std::size_t>(10);
        auto k_max = std::make_shared<std::size_t>(100);
        auto resamples = std::make_shared<std::size_t>(100);
        auto seed = std::make_shared<std::uint64_t>(1);
        cmd->add_option("--pools", *pools, "Sample pools JSONL")->required();
        cmd->add_option("--k", *k, "Selection budget");
        cmd->add_option("--strategy", *strategy, "Selection strategy: shortest or random")
            ->check(CLI::IsMember({"shortest", "random"}));
        cmd->add_option("--resamples", *resamples, "Subset draws per question");
        cmd->add_option("--seed", *seed, "Draw seed");
        cmd->add_option("--out", *out, "Report JSON")->required();
        cmd->add_option("--curves-out", *curves_out, "Gap curves CSV");
        cmd->add_option("--k-max", *k_max, "Largest k for the gap curves");
        cmd->callback([=, &rc] {
            rc = cmd_evaluate(*pools, *k, *strategy, *resamples, *seed, *out, *curves_out, *k_max);
        });
    }

    // pipeline
    {
        auto* cmd = app.add_subcommand("pipeline", "Run every stage from a config file");
        auto config = std::make_shared<std::string>();
        cmd->add_option("--config", *config, "Pipeline config JSON")->required();
        cmd->callback([=, &rc] {
            const json summary = forge::pipeline::run_pipeline(*config, &std::cerr);
            print_summary(summary);
            rc = 0;
        });
    }

    // dataset
    {
        auto* cmd = app.add_subcommand("dataset", "Join stage outputs into release triples");
        auto questions = std::make_shared<std::string>();
        auto solutions = std::make_shared<std::string>();
        auto critiques = std::make_shared<std::string>();
        auto results = std::make_shared<std::string>();
        auto out = std::make_shared<std::string>();
        cmd->add_option("--questions", *questions, "Questions JSONL")->required();
        cmd->add_option("--solutions", *solutions, "Accepted solutions JSONL")->required();
        cmd->add_option("--critiques", *critiques, "Accepted critiques JSONL");
        cmd->add_option("--results", *results, "Execution results JSONL");
        cmd->add_option("--out", *out, "Dataset JSONL")->required();
        cmd->callback([=, &rc] {
            rc = cmd_dataset(*questions, *solutions, *critiques, *results, *out);
        });
    }

    // bench
    {
        auto* cmd = app.add_subcommand("bench", "Benchmark file utilities");
        cmd->require_subcommand(1);
        {
            auto* sub = cmd->add_subcommand("validate", "Check a benchmark JSONL against the schema");
            auto in = std::make_shared<std::string>();
            auto lenient = std::make_shared<bool>(false);
            auto from = std::make_shared<int>(-1);
            auto to = std::make_shared<int>(-1);
            sub->add_option("--in", *in, "Benchmark JSONL")->required();
            sub->add_flag("--lenient", *lenient, "Skip bad lines instead of failing");
            sub->add_option("--from", *from, "Date range start (YYMM, inclusive)");
            sub->add_option("--to", *to, "Date range end (YYMM, inclusive)");
            sub->callback([=, &rc] { rc = cmd_bench_validate(*in, *lenient, *from, *to); });
        }
        {
            auto* sub = cmd->add_subcommand("harness", "Wrap a solution in a test driver");
            auto in = std::make_shared<std::string>();
            auto record = std::make_shared<std::string>();
            auto solution = std::make_shared<std::string>();
            auto lang = std::make_shared<std::string>("python");
            auto out = std::make_shared<std::string>();
            sub->add_option("--in", *in, "Benchmark JSONL")->required();
            sub->add_option("--record", *record, "problem_id of the record")->required();
            sub->add_option("--solution", *solution, "Solution source file")->required();
            sub->add_option("--lang", *lang, "Language: python or cpp")
                ->check(CLI::IsMember({"python", "cpp"}));
            sub->add_option("--out", *out, "Harness source output")->required();
            sub->callback(
                [=, &rc] { rc = cmd_bench_harness(*in, *record, *solution, *lang, *out); });
        }
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const forge::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const forge::JsonlError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const forge::NotEnoughTests& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const forge::ProviderError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    } catch (const forge::SandboxError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return rc;
}
