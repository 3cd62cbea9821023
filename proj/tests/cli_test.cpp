#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "reasonforge/exec.hpp"
#include "reasonforge/metrics.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/fs.hpp"
#include "reasonforge/util/jsonl.hpp"
#include "reasonforge/util/subprocess.hpp"
#include "test_support.hpp"

using namespace forge;
using testsupport::mk_q;
using testsupport::read_json_file;
namespace fsys = std::filesystem;

namespace {

fsys::path fixture_path(const std::string& name) { return testsupport::fixture_dir() / name; }

struct CliResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

CliResult run_cli(const std::vector<std::string>& args, const fsys::path& workdir) {
    std::vector<std::string> argv = {FORGE_BIN};
    argv.insert(argv.end(), args.begin(), args.end());
    RunLimits limits;
    limits.wall_timeout_s = 180.0;
    const RunResult r = run_process(argv, workdir, "", limits);
    EXPECT_FALSE(r.spawn_failed) << r.spawn_error;
    EXPECT_FALSE(r.timed_out);
    CliResult c;
    c.exit_code = r.exited ? r.exit_code : -1;
    c.out = r.out;
    c.err = r.err;
    return c;
}

// Subcommands print a one-line JSON summary as their last stdout line.
json summary_of(const CliResult& r) {
    std::size_t end = r.out.find_last_not_of('\n');
    if (end == std::string::npos) return json();
    std::size_t begin = r.out.find_last_of('\n', end);
    begin = begin == std::string::npos ? 0 : begin + 1;
    return json::parse(r.out.substr(begin, end - begin + 1));
}

Question doubling_q(const std::string& id) {
    Question q = mk_q(id, "Read one integer and print it doubled, id " + id + ".");
    for (int i = 1; i <= 5; ++i)
        q.tests.push_back({std::to_string(i) + "\n", std::to_string(2 * i) + "\n"});
    return q;
}

json raw_row(const std::string& qid, std::size_t sidx, const std::string& text,
             const std::string& finish = "stop") {
    return json{{"question_id", qid},
                {"sample_index", sidx},
                {"code_language", "python"},
                {"text", text},
                {"finish_reason", finish}};
}

}  // namespace

TEST(Cli, HelpListsSubcommands) {
    TempDir tmp("cli-help");
    const auto r = run_cli({"--help"}, tmp.path());
    EXPECT_EQ(r.exit_code, 0);
    for (const char* name :
         {"dedup", "decontaminate", "generate", "postprocess", "critique", "execute",
          "evaluate", "pipeline", "dataset", "bench"})
        EXPECT_NE(r.out.find(name), std::string::npos) << name;
}

TEST(Cli, MissingSubcommandFails) {
    TempDir tmp("cli-nosub");
    EXPECT_NE(run_cli({}, tmp.path()).exit_code, 0);
}

TEST(Cli, DedupSummaryAndClusterSidecar) {
    TempDir tmp("cli-dedup");
    const std::string out = (tmp.path() / "kept.jsonl").string();
    const std::string clusters = (tmp.path() / "clusters.jsonl").string();
    const auto r = run_cli({"dedup", "--in", fixture_path("pipeline_questions.jsonl").string(),
                            "--out", out, "--clusters", clusters, "--threshold", "0.9"},
                           tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json s = summary_of(r);
    EXPECT_EQ(s.at("in").get<int>(), 15);
    EXPECT_EQ(s.at("retained").get<int>(), 14);
    EXPECT_EQ(s.at("removed").get<int>(), 1);
    EXPECT_EQ(s.at("clusters").get<int>(), 1);
    EXPECT_EQ(load_questions(out).size(), 14u);
    const auto cluster_rows = read_jsonl(clusters);
    ASSERT_EQ(cluster_rows.size(), 1u);
    EXPECT_EQ(cluster_rows[0].at("canonical"), "p01");
}

TEST(Cli, ValidationFailureExitsTwo) {
    TempDir tmp("cli-badfile");
    const auto r = run_cli({"dedup", "--in", "/nonexistent/questions.jsonl", "--out",
                            (tmp.path() / "o.jsonl").string()},
                           tmp.path());
    EXPECT_EQ(r.exit_code, 2);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, PostprocessPartitionsRawRows) {
    TempDir tmp("cli-post");
    const std::string in = (tmp.path() / "raw.jsonl").string();
    write_jsonl(in, {raw_row("q1", 0, "<think>plan</think>\n```python\nprint(1)\n```\n"),
                     raw_row("q1", 1, "no reasoning markup at all")});
    const std::string out = (tmp.path() / "accepted.jsonl").string();
    const auto r =
        run_cli({"postprocess", "--kind", "solution", "--in", in, "--out", out}, tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json s = summary_of(r);
    EXPECT_EQ(s.at("in").get<int>(), 2);
    EXPECT_EQ(s.at("accepted").get<int>(), 1);
    EXPECT_EQ(s.at("rejected").get<int>(), 1);

    const auto accepted = read_jsonl(out);
    ASSERT_EQ(accepted.size(), 1u);
    EXPECT_EQ(accepted[0].at("solution_source"), "print(1)");
    // rejects default to a sidecar named after the output file
    const auto rejected = read_jsonl(out + ".rejected.jsonl");
    ASSERT_EQ(rejected.size(), 1u);
    EXPECT_EQ(rejected[0].at("reject_reason"), "missing_think");
}

TEST(Cli, PostprocessRejectsUnknownKind) {
    TempDir tmp("cli-kind");
    EXPECT_NE(run_cli({"postprocess", "--kind", "banana", "--in", "x", "--out", "y"}, tmp.path())
                  .exit_code,
              0);
}

TEST(Cli, GenerateIsDeterministic) {
    TempDir tmp("cli-gen");
    const std::string qs = fixture_path("pipeline_questions.jsonl").string();
    const std::string a = (tmp.path() / "a.jsonl").string();
    const std::string b = (tmp.path() / "b.jsonl").string();
    const auto ra =
        run_cli({"generate", "--questions", qs, "--out", a, "--n", "2", "--seed", "5"}, tmp.path());
    ASSERT_EQ(ra.exit_code, 0) << ra.err;
    const auto rb =
        run_cli({"generate", "--questions", qs, "--out", b, "--n", "2", "--seed", "5"}, tmp.path());
    ASSERT_EQ(rb.exit_code, 0) << rb.err;
    EXPECT_EQ(summary_of(ra).at("rows").get<int>(), 30);
    const std::string bytes_a = read_file(a);
    EXPECT_FALSE(bytes_a.empty());
    EXPECT_EQ(bytes_a, read_file(b));

    const std::string c = (tmp.path() / "c.jsonl").string();
    const auto rc =
        run_cli({"generate", "--questions", qs, "--out", c, "--n", "2", "--seed", "6"}, tmp.path());
    ASSERT_EQ(rc.exit_code, 0) << rc.err;
    EXPECT_NE(bytes_a, read_file(c));  // a different seed changes the samples
}

TEST(Cli, CritiqueProducesOneRowPerSolution) {
    TempDir tmp("cli-crit");
    const std::string qs = (tmp.path() / "questions.jsonl").string();
    save_questions(qs, {doubling_q("q1")});
    const std::string sols = (tmp.path() / "solutions.jsonl").string();
    write_jsonl(sols, {json{{"question_id", "q1"},
                            {"sample_index", 0},
                            {"code_language", "python"},
                            {"reasoning_trace", "r"},
                            {"solution_source", "print(int(input()) * 2)"}}});
    const std::string out = (tmp.path() / "critiques.raw.jsonl").string();
    const auto r = run_cli(
        {"critique", "--questions", qs, "--solutions", sols, "--out", out}, tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(summary_of(r).at("rows").get<int>(), 1);
    const auto rows = read_jsonl(out);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].at("question_id"), "q1");
    EXPECT_TRUE(rows[0].contains("finish_reason"));
}

TEST(Cli, ExecuteGradesSolutions) {
    TempDir tmp("cli-exec");
    const std::string qs = (tmp.path() / "questions.jsonl").string();
    save_questions(qs, {doubling_q("q1")});
    const std::string sols = (tmp.path() / "solutions.jsonl").string();
    write_jsonl(sols, {json{{"question_id", "q1"},
                            {"sample_index", 0},
                            {"code_language", "python"},
                            {"solution_source", "print(int(input()) * 2)"}}});
    const std::string out = (tmp.path() / "results.jsonl").string();
    const auto r = run_cli({"execute", "--solutions", sols, "--questions", qs, "--out", out,
                            "--timeout", "5", "--jobs", "1"},
                           tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(summary_of(r).at("executed").get<int>(), 1);
    const auto rows = read_jsonl(out);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].at("pass_count").get<int>(), 5);
    EXPECT_DOUBLE_EQ(rows[0].at("pass_rate").get<double>(), 1.0);
}

TEST(Cli, EvaluateWritesReportAndCurves) {
    TempDir tmp("cli-eval");
    std::vector<json> pool_rows;
    for (int qi = 0; qi < 3; ++qi) {
        metrics::SamplePool pool;
        pool.question_id = "q" + std::to_string(qi);
        pool.difficulty = Difficulty::easy;
        for (std::size_t s = 0; s < 4; ++s) {
            metrics::PoolSample ps;
            ps.sample_index = s;
            ps.is_correct = (s + qi) % 2 == 0;
            ps.judgment = ps.is_correct ? postproc::Judgment::right : postproc::Judgment::wrong;
            ps.critique_trace_length = 10 + s;
            pool.samples.push_back(ps);
        }
        pool_rows.push_back(metrics::pool_to_json(pool));
    }
    const std::string pools = (tmp.path() / "pools.jsonl").string();
    write_jsonl(pools, pool_rows);
    const std::string report_path = (tmp.path() / "report.json").string();
    const std::string curves_path = (tmp.path() / "curves.csv").string();
    const auto r = run_cli({"evaluate", "--pools", pools, "--k", "4", "--resamples", "10",
                            "--seed", "3", "--out", report_path, "--curves-out", curves_path,
                            "--k-max", "4"},
                           tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json s = summary_of(r);
    EXPECT_EQ(s.at("pools").get<int>(), 3);
    EXPECT_TRUE(s.contains("pass_at_1"));

    const json report = read_json_file(report_path);
    EXPECT_EQ(report.at("k").get<int>(), 4);
    EXPECT_EQ(report.at("overall").at("n_questions").get<int>(), 3);
    const std::string csv = read_file(curves_path);
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "k,pass_at_1,pass_at_1_select_at_k,pass_at_k");

    // asking for more samples than a pool holds is a validation failure
    const auto bad = run_cli(
        {"evaluate", "--pools", pools, "--k", "9", "--out", report_path}, tmp.path());
    EXPECT_EQ(bad.exit_code, 2);
}

TEST(Cli, DatasetJoinsTables) {
    TempDir tmp("cli-dataset");
    const std::string qs = (tmp.path() / "questions.jsonl").string();
    save_questions(qs, {doubling_q("q1")});
    const std::string sols = (tmp.path() / "solutions.jsonl").string();
    write_jsonl(sols, {json{{"question_id", "q1"},
                            {"sample_index", 0},
                            {"code_language", "python"},
                            {"reasoning_trace", "r"},
                            {"solution_source", "print(2)"}}});
    const std::string crits = (tmp.path() / "critiques.jsonl").string();
    write_jsonl(crits, {json{{"question_id", "q1"},
                             {"sample_index", 0},
                             {"judgment", "right"},
                             {"trace_length", 4},
                             {"critique_trace", "fine"}}});
    const std::string out = (tmp.path() / "dataset.jsonl").string();
    const auto r = run_cli({"dataset", "--questions", qs, "--solutions", sols, "--critiques",
                            crits, "--out", out},
                           tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    EXPECT_EQ(summary_of(r).at("triples").get<int>(), 1);
    const auto rows = read_jsonl(out);
    ASSERT_EQ(rows.size(), 1u);
    EXPECT_EQ(rows[0].at("judgment"), "right");
    EXPECT_FALSE(rows[0].contains("pass_rate"));
}

TEST(Cli, BenchValidateCountsAndDateWindow) {
    TempDir tmp("cli-bench");
    const auto r = run_cli({"bench", "validate", "--in", fixture_path("lcb.jsonl").string(),
                            "--from", "2408", "--to", "2502"},
                           tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json s = summary_of(r);
    EXPECT_EQ(s.at("records").get<int>(), 279);
    EXPECT_EQ(s.at("atcoder").get<int>(), 175);
    EXPECT_EQ(s.at("leetcode").get<int>(), 104);
    EXPECT_EQ(s.at("errors").get<int>(), 0);
    EXPECT_EQ(s.at("in_date_range").get<int>(), 155);
}

TEST(Cli, BenchValidateLenientVersusStrict) {
    TempDir tmp("cli-bench-bad");
    const fsys::path path = tmp.path() / "rows.jsonl";
    json good{{"problem_id", "a1"},     {"venue", "atcoder"},       {"date_tag", 2408},
              {"difficulty", "easy"},   {"statement", "Print 1."},  {"io_mode", "stdin_stdout"},
              {"tests", json::array({{{"input", ""}, {"expected_output", "1\n"}}})}};
    write_file(path, good.dump() + "\n{broken\n");

    const auto strict = run_cli({"bench", "validate", "--in", path.string()}, tmp.path());
    EXPECT_EQ(strict.exit_code, 2);

    const auto lenient =
        run_cli({"bench", "validate", "--in", path.string(), "--lenient"}, tmp.path());
    ASSERT_EQ(lenient.exit_code, 0) << lenient.err;
    const json s = summary_of(lenient);
    EXPECT_EQ(s.at("records").get<int>(), 1);
    EXPECT_EQ(s.at("errors").get<int>(), 1);
    EXPECT_NE(lenient.err.find("rows.jsonl:2"), std::string::npos);
}

TEST(Cli, BenchHarnessWrapsSolution) {
    TempDir tmp("cli-harness");
    const fsys::path solution = tmp.path() / "solution.py";
    write_file(solution,
               "class Solution:\n    def rowSum(self, nums: List[int]) -> int:\n"
               "        return sum(nums)\n");
    const std::string out = (tmp.path() / "harness.py").string();
    const auto r = run_cli({"bench", "harness", "--in", fixture_path("lcb.jsonl").string(),
                            "--record", "lc0000", "--solution", solution.string(), "--lang",
                            "python", "--out", out},
                           tmp.path());
    ASSERT_EQ(r.exit_code, 0) << r.err;
    const json s = summary_of(r);
    EXPECT_TRUE(s.at("valid").get<bool>());
    EXPECT_NE(read_file(out).find("_forge_main"), std::string::npos);

    // a mismatched solution still writes a runnable stub, flagged in the summary
    write_file(solution, "print('unrelated')\n");
    const auto r2 = run_cli({"bench", "harness", "--in", fixture_path("lcb.jsonl").string(),
                             "--record", "lc0000", "--solution", solution.string(), "--lang",
                             "python", "--out", out},
                            tmp.path());
    ASSERT_EQ(r2.exit_code, 0) << r2.err;
    EXPECT_FALSE(summary_of(r2).at("valid").get<bool>());
    EXPECT_TRUE(summary_of(r2).contains("invalid_reason"));
}

TEST(Cli, ProviderFailureExitsThree) {
    TempDir tmp("cli-provider");
    const fsys::path profile = tmp.path() / "profile.json";
    write_file(profile, json{{"base_url", "http://127.0.0.1:1"}}.dump());
    const std::string qs = (tmp.path() / "questions.jsonl").string();
    save_questions(qs, {doubling_q("q1")});
    const auto r = run_cli({"generate", "--questions", qs, "--out",
                            (tmp.path() / "raw.jsonl").string(), "--n", "1", "--provider",
                            "http", "--profile", profile.string()},
                           tmp.path());
    EXPECT_EQ(r.exit_code, 3);
    EXPECT_NE(r.err.find("error:"), std::string::npos);
}

TEST(Cli, PipelineRunsAndResumes) {
    TempDir tmp("cli-pipeline");
    const std::string qs = (tmp.path() / "questions.jsonl").string();
    save_questions(qs, {doubling_q("alpha"), doubling_q("beta")});
    const fsys::path config = tmp.path() / "config.json";
    write_file(config, json{{"run_id", "cli"},
                            {"seed", 7},
                            {"jobs", 2},
                            {"out_dir", (tmp.path() / "out").string()},
                            {"questions", qs},
                            {"generate", {{"n_samples", 2}}},
                            {"execute", {{"per_test_timeout_s", 5.0}}},
                            {"evaluate", {{"k", 2}, {"n_resamples", 5}}}}
                           .dump());

    const auto first = run_cli({"pipeline", "--config", config.string()}, tmp.path());
    ASSERT_EQ(first.exit_code, 0) << first.err;
    const json s1 = summary_of(first);
    ASSERT_EQ(s1.at("stages").size(), 8u);
    for (const auto& st : s1.at("stages")) EXPECT_EQ(st.at("status"), "complete");
    EXPECT_NE(first.err.find("stage 1 dedup: running"), std::string::npos);
    EXPECT_TRUE(fsys::exists(tmp.path() / "out" / "report.json"));
    EXPECT_TRUE(fsys::exists(tmp.path() / "out" / "dataset.jsonl"));

    const auto second = run_cli({"pipeline", "--config", config.string()}, tmp.path());
    ASSERT_EQ(second.exit_code, 0) << second.err;
    for (const auto& st : summary_of(second).at("stages")) EXPECT_EQ(st.at("status"), "skipped");
}
