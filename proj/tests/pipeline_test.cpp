#include <gtest/gtest.h>

#include <filesystem>
#include <string>
#include <vector>

#include "reasonforge/exec.hpp"
#include "reasonforge/pipeline.hpp"
#include "reasonforge/util/fs.hpp"
#include "test_support.hpp"

using namespace forge;
using testsupport::mk_q;
using testsupport::read_json_file;
namespace fsys = std::filesystem;

// ---- configuration -----------------------------------------------------------

TEST(Config, MinimalJsonKeepsDefaults) {
    const auto cfg = pipeline::config_from_json(
        json{{"out_dir", "/tmp/x"}, {"questions", "/tmp/q.jsonl"}});
    EXPECT_EQ(cfg.run_id, "run");
    EXPECT_EQ(cfg.seed, 42u);
    EXPECT_EQ(cfg.jobs, 2u);
    EXPECT_EQ(cfg.provider_kind, "mock");
    EXPECT_EQ(cfg.model, "default");
    EXPECT_DOUBLE_EQ(cfg.dedup_threshold, 0.9);
    EXPECT_DOUBLE_EQ(cfg.screen_threshold, 0.7);
    EXPECT_EQ(cfg.embed_dims, 256u);
    EXPECT_EQ(cfg.n_samples, 4);
    ASSERT_EQ(cfg.languages.size(), 1u);
    EXPECT_EQ(cfg.languages[0], CodeLanguage::python);
    EXPECT_DOUBLE_EQ(cfg.temperature, 0.6);
    EXPECT_DOUBLE_EQ(cfg.top_p, 0.95);
    EXPECT_EQ(cfg.report.k, 10u);
    EXPECT_EQ(cfg.report.n_resamples, 100u);
    EXPECT_EQ(cfg.snapshot.at("out_dir"), "/tmp/x");
}

TEST(Config, FullJsonParsesEverySection) {
    const json j{{"run_id", "night-7"},
                 {"seed", 9},
                 {"jobs", 3},
                 {"out_dir", "/tmp/out"},
                 {"questions", "q.jsonl"},
                 {"benchmark_items", "b.jsonl"},
                 {"model", "solver-v2"},
                 {"provider", {{"kind", "mock"}, {"script", "script.json"}}},
                 {"dedup", {{"threshold", 0.85}}},
                 {"decontaminate", {{"screen_threshold", 0.6}, {"embed_dims", 64}}},
                 {"generate",
                  {{"n_samples", 6},
                   {"temperature", 0.2},
                   {"top_p", 0.9},
                   {"max_new_tokens", 512},
                   {"languages", json::array({"python", "cpp"})}}},
                 {"critique", {{"max_new_tokens", 256}}},
                 {"execute",
                  {{"per_test_timeout_s", 2.5},
                   {"memory_limit_bytes", 1234567},
                   {"max_output_bytes", 4096},
                   {"compile_timeout_s", 30.0}}},
                 {"evaluate",
                  {{"k", 6}, {"n_resamples", 40}, {"seed", 5}, {"strategy", "random"}}}};
    const auto cfg = pipeline::config_from_json(j);
    EXPECT_EQ(cfg.run_id, "night-7");
    EXPECT_EQ(cfg.seed, 9u);
    EXPECT_EQ(cfg.jobs, 3u);
    EXPECT_EQ(cfg.benchmark_items_path, "b.jsonl");
    EXPECT_EQ(cfg.model, "solver-v2");
    EXPECT_EQ(cfg.mock_script_path, "script.json");
    EXPECT_DOUBLE_EQ(cfg.dedup_threshold, 0.85);
    EXPECT_DOUBLE_EQ(cfg.screen_threshold, 0.6);
    EXPECT_EQ(cfg.embed_dims, 64u);
    EXPECT_EQ(cfg.n_samples, 6);
    EXPECT_EQ(cfg.solution_max_new_tokens, 512);
    EXPECT_EQ(cfg.critique_max_new_tokens, 256);
    ASSERT_EQ(cfg.languages.size(), 2u);
    EXPECT_EQ(cfg.languages[1], CodeLanguage::cpp);
    EXPECT_DOUBLE_EQ(cfg.sandbox.per_test_timeout_s, 2.5);
    EXPECT_EQ(cfg.sandbox.memory_limit_bytes, 1234567u);
    EXPECT_EQ(cfg.sandbox.max_output_bytes, 4096u);
    EXPECT_EQ(cfg.report.k, 6u);
    EXPECT_EQ(cfg.report.n_resamples, 40u);
    EXPECT_EQ(cfg.report.seed, 5u);
    EXPECT_EQ(cfg.report.strategy, metrics::SelectionStrategy::random_pick);
}

TEST(Config, RejectsBadValues) {
    const json base{{"out_dir", "/tmp/x"}, {"questions", "q.jsonl"}};
    auto with = [&](const char* key, json v) {
        json j = base;
        j[key] = std::move(v);
        return j;
    };
    EXPECT_THROW(pipeline::config_from_json(json{{"questions", "q"}}), ValidationError);
    EXPECT_THROW(pipeline::config_from_json(json{{"out_dir", "x"}}), ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("provider", {{"kind", "vllm"}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("provider", {{"kind", "http"}})),
                 ValidationError);  // base_url missing
    EXPECT_THROW(pipeline::config_from_json(with("dedup", {{"threshold", 0.0}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("decontaminate", {{"screen_threshold", 1.5}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("decontaminate", {{"embed_dims", 0}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("generate", {{"n_samples", 0}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("generate", {{"languages", json::array()}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(
                     with("generate", {{"languages", json::array({"python", "python"})}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("generate", {{"max_new_tokens", 0}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("jobs", 0)), ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("evaluate", {{"k", 0}})), ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("evaluate", {{"n_resamples", 0}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("evaluate", {{"strategy", "best"}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("execute", {{"per_test_timeout_s", 0.0}})),
                 ValidationError);
    EXPECT_THROW(pipeline::config_from_json(with("generate", "not an object")),
                 ValidationError);
}

TEST(Config, LoadConfigReportsFile) {
    EXPECT_THROW(pipeline::load_config("/nonexistent/cfg.json"), ValidationError);
    TempDir tmp("cfg");
    const fsys::path bad = tmp.path() / "bad.json";
    write_file(bad, "{broken");
    try {
        pipeline::load_config(bad.string());
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.json"), std::string::npos);
    }
}

// ---- joining stage outputs ------------------------------------------------------

namespace {

// A question with enough tests to clear the execution minimum.
Question full_question(const std::string& id, Difficulty d = Difficulty::easy) {
    Question q = mk_q(id, "Read n and print n doubled, question " + id + ".");
    q.difficulty = d;
    for (int i = 1; i <= 5; ++i)
        q.tests.push_back({std::to_string(i) + "\n", std::to_string(2 * i) + "\n"});
    return q;
}

json solution_row(const std::string& qid, std::size_t sidx) {
    return json{{"question_id", qid},
                {"sample_index", sidx},
                {"code_language", "python"},
                {"reasoning_trace", "thinking about " + qid},
                {"solution_source", "print(int(input()) * 2)"}};
}

json critique_row(const std::string& qid, std::size_t sidx, const std::string& judgment,
                  std::size_t trace_length) {
    return json{{"question_id", qid},
                {"sample_index", sidx},
                {"judgment", judgment},
                {"trace_length", trace_length},
                {"critique_trace", "checked " + qid}};
}

json result_row(const std::string& qid, std::size_t sidx, std::size_t passed) {
    exec::ExecutionResult r;
    r.question_id = qid;
    r.sample_index = sidx;
    r.code_language = CodeLanguage::python;
    r.compile_status = exec::CompileStatus::not_applicable;
    r.pass_count = passed;
    r.test_count = 5;
    r.pass_rate = static_cast<double>(passed) / 5.0;
    return exec::result_to_json(r);
}

struct TableFiles {
    TempDir tmp{"tables"};
    std::string questions = (tmp.path() / "questions.jsonl").string();
    std::string solutions = (tmp.path() / "solutions.jsonl").string();
    std::string critiques = (tmp.path() / "critiques.jsonl").string();
    std::string results = (tmp.path() / "results.jsonl").string();

    void write(const std::vector<Question>& qs, const std::vector<json>& sols,
               const std::vector<json>& crits, const std::vector<json>& res) {
        save_questions(questions, qs);
        write_jsonl(solutions, sols);
        write_jsonl(critiques, crits);
        write_jsonl(results, res);
    }
};

}  // namespace

TEST(JoinedTables, LoadsAndDetectsDuplicates) {
    TableFiles files;
    files.write({full_question("q1"), full_question("q2")},
                {solution_row("q1", 0), solution_row("q2", 0)},
                {critique_row("q1", 0, "right", 3)}, {result_row("q1", 0, 5)});
    const auto t =
        pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results);
    EXPECT_EQ(t.questions.size(), 2u);
    EXPECT_EQ(t.solutions.size(), 2u);
    EXPECT_EQ(t.critiques.size(), 1u);
    EXPECT_EQ(t.results.size(), 1u);
    EXPECT_EQ(t.critiques.at({"q1", 0}).judgment, postproc::Judgment::right);
    EXPECT_EQ(t.critiques.at({"q1", 0}).trace_length, 3u);

    write_jsonl(files.critiques, {critique_row("q1", 0, "right", 3),
                                  critique_row("q1", 0, "wrong", 4)});
    EXPECT_THROW(
        pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results),
        ValidationError);

    write_jsonl(files.critiques, {critique_row("q1", 0, "right", 3)});
    write_jsonl(files.results, {result_row("q1", 0, 5), result_row("q1", 0, 4)});
    EXPECT_THROW(
        pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results),
        ValidationError);
}

TEST(BuildPools, CountsIncompleteChainsWithoutScoringThem) {
    TableFiles files;
    // q2 appears first in the solutions file, so its pool comes first
    files.write({full_question("q1"), full_question("q2")},
                {solution_row("q2", 0), solution_row("q1", 0), solution_row("q1", 1),
                 solution_row("q1", 2)},
                {critique_row("q2", 0, "right", 2), critique_row("q1", 0, "wrong", 9),
                 critique_row("q1", 2, "right", 4)},
                {result_row("q2", 0, 5), result_row("q1", 0, 3), result_row("q1", 2, 5)});
    const auto t =
        pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results);
    const auto built = pipeline::build_pools(t);
    ASSERT_EQ(built.pools.size(), 2u);
    EXPECT_EQ(built.pools[0].question_id, "q2");
    EXPECT_EQ(built.pools[1].question_id, "q1");
    EXPECT_EQ(built.pool_samples, 3u);
    EXPECT_EQ(built.samples_without_result, 1u);    // q1 sample 1 never ran
    EXPECT_EQ(built.samples_without_critique, 0u);
    ASSERT_EQ(built.pools[1].samples.size(), 2u);
    EXPECT_FALSE(built.pools[1].samples[0].is_correct);  // 3 of 5 tests
    EXPECT_TRUE(built.pools[1].samples[1].is_correct);
    EXPECT_EQ(built.pools[1].samples[1].judgment, postproc::Judgment::right);
}

TEST(BuildPools, MissingCritiqueCountedSeparately) {
    TableFiles files;
    files.write({full_question("q1")}, {solution_row("q1", 0), solution_row("q1", 1)},
                {critique_row("q1", 0, "right", 2)},
                {result_row("q1", 0, 5), result_row("q1", 1, 5)});
    const auto built = pipeline::build_pools(
        pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results));
    EXPECT_EQ(built.pool_samples, 1u);
    EXPECT_EQ(built.samples_without_critique, 1u);
}

TEST(BuildPools, RejectsDuplicateAndUnknownSamples) {
    TableFiles files;
    files.write({full_question("q1")}, {solution_row("q1", 0), solution_row("q1", 0)},
                {critique_row("q1", 0, "right", 2)}, {result_row("q1", 0, 5)});
    EXPECT_THROW(pipeline::build_pools(pipeline::load_tables(
                     files.questions, files.solutions, files.critiques, files.results)),
                 ValidationError);

    files.write({full_question("q1")}, {solution_row("q9", 0)},
                {critique_row("q9", 0, "right", 2)}, {result_row("q9", 0, 5)});
    EXPECT_THROW(pipeline::build_pools(pipeline::load_tables(
                     files.questions, files.solutions, files.critiques, files.results)),
                 ValidationError);
}

TEST(EmitDataset, LeftJoinsCritiqueAndExecution) {
    TableFiles files;
    files.write({full_question("q1")},
                {solution_row("q1", 0), solution_row("q1", 1), solution_row("q1", 2)},
                {critique_row("q1", 0, "right", 2)}, {result_row("q1", 1, 4)});
    const auto t =
        pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results);
    const std::string out = (files.tmp.path() / "dataset.jsonl").string();
    EXPECT_EQ(pipeline::emit_dataset(t, out), 3u);

    const auto rows = read_jsonl(out);
    ASSERT_EQ(rows.size(), 3u);
    for (const auto& row : rows) {
        EXPECT_EQ(row.at("question_id"), "q1");
        EXPECT_EQ(row.at("code_language"), "python");
        EXPECT_TRUE(row.contains("solution_reasoning"));
        EXPECT_TRUE(row.contains("solution_source"));
        EXPECT_TRUE(row.contains("source"));
    }
    EXPECT_TRUE(rows[0].contains("judgment"));
    EXPECT_EQ(rows[0].at("critique_reasoning"), "checked q1");
    EXPECT_FALSE(rows[0].contains("pass_rate"));
    EXPECT_FALSE(rows[1].contains("judgment"));
    EXPECT_DOUBLE_EQ(rows[1].at("pass_rate").get<double>(), 0.8);
    EXPECT_FALSE(rows[2].contains("judgment"));
    EXPECT_FALSE(rows[2].contains("pass_rate"));
}

TEST(EmitDataset, RejectsDuplicateKeysAndUnknownQuestions) {
    TableFiles files;
    files.write({full_question("q1")}, {solution_row("q1", 0), solution_row("q1", 0)}, {}, {});
    auto t =
        pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results);
    EXPECT_THROW(pipeline::emit_dataset(t, (files.tmp.path() / "d.jsonl").string()),
                 ValidationError);

    files.write({full_question("q1")}, {solution_row("q9", 0)}, {}, {});
    t = pipeline::load_tables(files.questions, files.solutions, files.critiques, files.results);
    EXPECT_THROW(pipeline::emit_dataset(t, (files.tmp.path() / "d.jsonl").string()),
                 ValidationError);
}

// ---- the runner -------------------------------------------------------------------

namespace {

// Three distinct questions, five tests each, scored with a small mock setup
// so a full run takes a couple of seconds.
json runner_config(const fsys::path& dir) {
    const std::string questions = (dir / "questions.jsonl").string();
    std::vector<Question> qs = {full_question("alpha", Difficulty::easy),
                                full_question("beta", Difficulty::medium),
                                full_question("gamma", Difficulty::hard)};
    qs[1].statement = "Count the vowels in the given word and print the count.";
    qs[2].statement = "Print the sum of the two integers on the input line.";
    save_questions(questions, qs);
    return json{{"run_id", "unit"},
                {"seed", 7},
                {"jobs", 2},
                {"out_dir", (dir / "out").string()},
                {"questions", questions},
                {"generate", {{"n_samples", 2}}},
                {"execute", {{"per_test_timeout_s", 5.0}}},
                {"evaluate", {{"k", 2}, {"n_resamples", 5}, {"seed", 3}}}};
}

std::vector<std::string> stage_statuses(const json& summary) {
    std::vector<std::string> out;
    for (const auto& s : summary.at("stages")) out.push_back(s.at("status").get<std::string>());
    return out;
}

// Product files that must be reproducible byte for byte. Execution results
// carry wall-clock timings, so they are compared structurally elsewhere.
const std::vector<std::string> kStableProducts = {
    "questions.deduped.jsonl", "dedup.clusters.jsonl",   "questions.clean.jsonl",
    "decontam.verdicts.jsonl", "solutions.raw.jsonl",    "solutions.jsonl",
    "solutions.rejected.jsonl", "critiques.raw.jsonl",   "critiques.jsonl",
    "critiques.rejected.jsonl", "pools.jsonl",           "report.json",
    "dataset.jsonl"};

}  // namespace

TEST(Runner, FullMockRunProducesEveryArtifact) {
    TempDir tmp("runner");
    const json cfg_json = runner_config(tmp.path());
    pipeline::Runner runner(pipeline::config_from_json(cfg_json));
    const json summary = runner.run();

    EXPECT_EQ(summary.at("run_id"), "unit");
    const auto statuses = stage_statuses(summary);
    ASSERT_EQ(statuses.size(), 8u);
    for (const auto& s : statuses) EXPECT_EQ(s, "complete");
    const std::vector<std::string> names = {
        "dedup",    "decontaminate",         "generate_solutions", "postprocess_solutions",
        "generate_critiques", "postprocess_critiques", "execute",  "evaluate"};
    for (std::size_t i = 0; i < names.size(); ++i)
        EXPECT_EQ(summary.at("stages")[i].at("name"), names[i]);

    const auto& paths = runner.paths();
    for (const auto& name : kStableProducts)
        EXPECT_TRUE(fsys::exists(paths.out / name)) << name;
    EXPECT_TRUE(fsys::exists(paths.results()));

    EXPECT_EQ(read_jsonl(paths.solutions_raw().string()).size(), 6u);
    EXPECT_EQ(read_jsonl(paths.solutions().string()).size(), 6u);
    EXPECT_EQ(read_jsonl(paths.critiques().string()).size(), 6u);
    EXPECT_EQ(read_jsonl(paths.results().string()).size(), 6u);
    const auto pools = read_jsonl(paths.pools().string());
    ASSERT_EQ(pools.size(), 3u);
    for (const auto& p : pools) EXPECT_EQ(p.at("samples").size(), 2u);

    const json report = read_json_file(paths.report());
    EXPECT_EQ(report.at("overall").at("n_questions").get<int>(), 3);
    EXPECT_EQ(report.at("overall").at("n_samples").get<int>(), 6);
    EXPECT_TRUE(report.at("by_difficulty").contains("easy"));
    EXPECT_TRUE(report.at("by_difficulty").contains("medium"));
    EXPECT_TRUE(report.at("by_difficulty").contains("hard"));

    const auto dataset = read_jsonl(paths.dataset().string());
    ASSERT_EQ(dataset.size(), 6u);
    for (const auto& row : dataset) {
        EXPECT_TRUE(row.contains("judgment"));
        EXPECT_TRUE(row.contains("pass_rate"));
        EXPECT_TRUE(row.contains("solution_reasoning"));
    }

    const json manifest = read_json_file(paths.manifest(1, "dedup"));
    for (const char* key : {"run_id", "stage", "name", "index", "config_digest", "config",
                            "seeds", "provider", "started_at", "inputs", "counts", "outputs",
                            "status", "finished_at"})
        EXPECT_TRUE(manifest.contains(key)) << key;
    EXPECT_EQ(manifest.at("status"), "complete");
    EXPECT_EQ(manifest.at("counts").at("in").get<int>(), 3);
    EXPECT_EQ(manifest.at("counts").at("retained").get<int>(), 3);
    EXPECT_EQ(manifest.at("config"), cfg_json);

    const json gen_manifest = read_json_file(paths.manifest(3, "generate_solutions"));
    EXPECT_EQ(gen_manifest.at("counts").at("rows").get<int>(), 6);
    EXPECT_EQ(gen_manifest.at("counts").at("provider_calls").get<int>(), 3);
    EXPECT_EQ(gen_manifest.at("counts").at("reused_blocks").get<int>(), 0);

    const json exec_manifest = read_json_file(paths.manifest(7, "execute"));
    EXPECT_EQ(exec_manifest.at("counts").at("executed").get<int>(), 6);
    EXPECT_TRUE(exec_manifest.at("counts").contains("toolchain"));
}

TEST(Runner, SecondRunSkipsEveryStage) {
    TempDir tmp("runner-skip");
    const json cfg_json = runner_config(tmp.path());
    pipeline::Runner first(pipeline::config_from_json(cfg_json));
    first.run();
    const auto& paths = first.paths();
    const std::string dataset_before = read_file(paths.dataset().string());
    const std::string report_before = read_file(paths.report().string());

    pipeline::Runner second(pipeline::config_from_json(cfg_json));
    const json summary = second.run();
    for (const auto& s : stage_statuses(summary)) EXPECT_EQ(s, "skipped");
    EXPECT_EQ(read_file(paths.dataset().string()), dataset_before);
    EXPECT_EQ(read_file(paths.report().string()), report_before);
}

TEST(Runner, DeletedOutputReRunsOnlyThatStage) {
    TempDir tmp("runner-tamper");
    const json cfg_json = runner_config(tmp.path());
    pipeline::Runner first(pipeline::config_from_json(cfg_json));
    first.run();
    const auto& paths = first.paths();
    const std::string report_before = read_file(paths.report().string());
    fsys::remove(paths.report());

    pipeline::Runner second(pipeline::config_from_json(cfg_json));
    const auto statuses = stage_statuses(second.run());
    ASSERT_EQ(statuses.size(), 8u);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(statuses[i], "skipped") << i;
    EXPECT_EQ(statuses[7], "complete");
    EXPECT_EQ(read_file(paths.report().string()), report_before);
}

TEST(Runner, ConfigChangeInvalidatesCachedStages) {
    TempDir tmp("runner-digest");
    json cfg_json = runner_config(tmp.path());
    pipeline::Runner first(pipeline::config_from_json(cfg_json));
    first.run();

    cfg_json["run_id"] = "unit-v2";  // any config edit changes the digest
    pipeline::Runner second(pipeline::config_from_json(cfg_json));
    for (const auto& s : stage_statuses(second.run())) EXPECT_EQ(s, "complete");
}

TEST(Runner, FreshDirectoriesProduceIdenticalProducts) {
    TempDir a("runner-a");
    TempDir b("runner-b");
    pipeline::Runner ra(pipeline::config_from_json(runner_config(a.path())));
    pipeline::Runner rb(pipeline::config_from_json(runner_config(b.path())));
    ra.run();
    rb.run();
    for (const auto& name : kStableProducts)
        EXPECT_EQ(read_file((ra.paths().out / name).string()),
                  read_file((rb.paths().out / name).string()))
            << name;
}

TEST(Runner, FailingStageWritesFailedManifestAndRethrows) {
    TempDir tmp("runner-fail");
    json cfg_json = runner_config(tmp.path());
    const fsys::path script = tmp.path() / "mangled.json";
    write_file(script, json{{"malformed_every", 1}, {"entries", json::array()}}.dump());
    cfg_json["provider"] = json{{"kind", "mock"}, {"script", script.string()}};

    pipeline::Runner runner(pipeline::config_from_json(cfg_json));
    try {
        runner.run();
        FAIL() << "expected ValidationError from the evaluate stage";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("no fully processed samples"), std::string::npos)
            << e.what();
    }

    const auto& paths = runner.paths();
    // every response was mangled, so nothing survived post-processing
    EXPECT_EQ(read_jsonl(paths.solutions().string()).size(), 0u);
    EXPECT_EQ(read_jsonl(paths.solutions_rejected().string()).size(), 6u);
    const json m4 = read_json_file(paths.manifest(4, "postprocess_solutions"));
    EXPECT_EQ(m4.at("status"), "complete");
    EXPECT_EQ(m4.at("counts").at("rejected").get<int>(), 6);

    const json m8 = read_json_file(paths.manifest(8, "evaluate"));
    EXPECT_EQ(m8.at("status"), "failed");
    EXPECT_NE(m8.at("error").get<std::string>().find("no fully processed samples"),
              std::string::npos);
    EXPECT_TRUE(m8.at("outputs").is_object());
    EXPECT_TRUE(m8.at("outputs").empty());  // the stage failed before writing anything
}

TEST(Runner, InterruptedGenerationReusesCompleteBlocks) {
    TempDir tmp("runner-resume");
    const json cfg_json = runner_config(tmp.path());
    pipeline::Runner first(pipeline::config_from_json(cfg_json));
    first.run();
    const auto& paths = first.paths();
    const std::string raw_before = read_file(paths.solutions_raw().string());
    const std::string dataset_before = read_file(paths.dataset().string());

    // Simulate a crash mid-generation: the manifest never landed and only the
    // first question's block of rows made it to disk.
    fsys::remove(paths.manifest(3, "generate_solutions"));
    std::string truncated;
    std::size_t kept_lines = 0, pos = 0;
    while (kept_lines < 2 && pos < raw_before.size()) {
        const std::size_t nl = raw_before.find('\n', pos);
        truncated += raw_before.substr(pos, nl - pos + 1);
        pos = nl + 1;
        ++kept_lines;
    }
    write_file(paths.solutions_raw(), truncated);

    pipeline::Runner second(pipeline::config_from_json(cfg_json));
    const auto statuses = stage_statuses(second.run());
    EXPECT_EQ(statuses[0], "skipped");
    EXPECT_EQ(statuses[1], "skipped");
    EXPECT_EQ(statuses[2], "complete");  // regenerated
    for (std::size_t i = 3; i < 8; ++i) EXPECT_EQ(statuses[i], "skipped") << i;

    EXPECT_EQ(read_file(paths.solutions_raw().string()), raw_before);
    EXPECT_EQ(read_file(paths.dataset().string()), dataset_before);
    const json m3 = read_json_file(paths.manifest(3, "generate_solutions"));
    EXPECT_EQ(m3.at("counts").at("reused_blocks").get<int>(), 1);
    EXPECT_EQ(m3.at("counts").at("provider_calls").get<int>(), 2);
}
