#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reasonforge/errors.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/fs.hpp"
#include "reasonforge/util/hash.hpp"
#include "reasonforge/util/jsonl.hpp"
#include "reasonforge/util/parallel.hpp"
#include "reasonforge/util/rng.hpp"
#include "reasonforge/util/subprocess.hpp"

namespace forge::exec {

constexpr std::size_t kMinTests = 5;
constexpr std::size_t kMaxTests = 50;

// The fixed compile line for native solutions; recorded in run metadata so a
// result file pins the toolchain contract it was produced under.
inline const std::vector<std::string>& cpp_compile_flags() {
    static const std::vector<std::string> flags = {"-std=gnu++17", "-O2"};
    return flags;
}

struct SandboxPolicy {
    double per_test_timeout_s = 10.0;
    std::uint64_t memory_limit_bytes = 1ull << 30;
    std::uint64_t max_output_bytes = 8ull << 20;
    double compile_timeout_s = 60.0;

    void validate() const {
        if (per_test_timeout_s <= 0 || memory_limit_bytes == 0 || max_output_bytes == 0 ||
            compile_timeout_s <= 0)
            throw ValidationError("sandbox policy: all limits must be strictly positive");
    }
};

enum class TestStatus { pass, wrong_answer, runtime_error, timeout, output_limit };

inline std::string to_string(TestStatus s) {
    switch (s) {
        case TestStatus::pass: return "pass";
        case TestStatus::wrong_answer: return "wrong_answer";
        case TestStatus::runtime_error: return "runtime_error";
        case TestStatus::timeout: return "timeout";
        case TestStatus::output_limit: return "output_limit";
    }
    return "runtime_error";
}

inline TestStatus test_status_from_string(const std::string& s) {
    if (s == "pass") return TestStatus::pass;
    if (s == "wrong_answer") return TestStatus::wrong_answer;
    if (s == "runtime_error") return TestStatus::runtime_error;
    if (s == "timeout") return TestStatus::timeout;
    if (s == "output_limit") return TestStatus::output_limit;
    throw ValidationError("unknown test status: " + s);
}

struct TestVerdict {
    std::size_t test_index = 0;
    TestStatus status = TestStatus::runtime_error;
    double wall_time_s = 0.0;
    std::string stderr_excerpt;
};

enum class CompileStatus { ok, compile_error, not_applicable };

inline std::string to_string(CompileStatus s) {
    switch (s) {
        case CompileStatus::ok: return "ok";
        case CompileStatus::compile_error: return "compile_error";
        case CompileStatus::not_applicable: return "not_applicable";
    }
    return "compile_error";
}

inline CompileStatus compile_status_from_string(const std::string& s) {
    if (s == "ok") return CompileStatus::ok;
    if (s == "compile_error") return CompileStatus::compile_error;
    if (s == "not_applicable") return CompileStatus::not_applicable;
    throw ValidationError("unknown compile status: " + s);
}

struct ExecutionResult {
    std::string question_id;
    std::size_t sample_index = 0;
    CodeLanguage code_language = CodeLanguage::python;
    CompileStatus compile_status = CompileStatus::not_applicable;
    std::string compile_diagnostics;  // first 4 KiB of compiler output on failure
    std::vector<TestVerdict> verdicts;
    std::size_t pass_count = 0;
    std::size_t test_count = 0;
    double pass_rate = 0.0;

    // Ground truth for the metrics layer: a solution is correct iff it passed
    // every selected test.
    bool correct() const { return test_count > 0 && pass_count == test_count; }
};

// The >50 rule keys the generator on (seed, question id), so a run-level seed
// yields an independent, order-insensitive selection per question.
inline std::vector<TestCase> select_tests(const Question& question, std::uint64_t seed) {
    if (question.tests.size() < kMinTests) throw NotEnoughTests(question.id, question.tests.size());
    if (question.tests.size() <= kMaxTests) return question.tests;
    Rng rng(combine_hash(mix64(seed), fnv1a64(question.id)));
    auto picked = rng.sample_without_replacement(question.tests.size(), kMaxTests);
    std::sort(picked.begin(), picked.end());
    std::vector<TestCase> out;
    out.reserve(kMaxTests);
    for (std::size_t i : picked) out.push_back(question.tests[i]);
    return out;
}

// Trailing whitespace per line and trailing blank lines are insignificant;
// everything else must match byte for byte.
inline std::string normalize_output(std::string_view raw) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        const std::size_t eol = raw.find('\n', pos);
        std::string_view line =
            raw.substr(pos, eol == std::string_view::npos ? raw.size() - pos : eol - pos);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t' ||
                                 line.back() == '\r' || line.back() == '\v' ||
                                 line.back() == '\f'))
            line.remove_suffix(1);
        lines.push_back(line);
        if (eol == std::string_view::npos) break;
        pos = eol + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i > 0) out.push_back('\n');
        out.append(lines[i]);
    }
    return out;
}

struct CompiledSolution {
    CompileStatus status = CompileStatus::not_applicable;
    std::filesystem::path artifact;  // native binary, or the python source file
    std::string diagnostics;
    CodeLanguage code_language = CodeLanguage::python;

    std::vector<std::string> run_argv() const {
        if (code_language == CodeLanguage::python) return {"python3", artifact.string()};
        return {artifact.string()};
    }
};

// C++ goes through the system compiler at a pinned standard and optimization
// level; python is written out as-is after a bytecode-compilation check.
// Toolchain absence is a sandbox failure, not a solution failure.
inline CompiledSolution compile_solution(const std::string& source, CodeLanguage lang,
                                         const SandboxPolicy& policy,
                                         const std::filesystem::path& scratch) {
    policy.validate();
    CompiledSolution compiled;
    compiled.code_language = lang;

    if (lang == CodeLanguage::python) {
        const auto src_path = scratch / "solution.py";
        write_file(src_path.string(), source);
        RunLimits limits;
        limits.wall_timeout_s = policy.compile_timeout_s;
        limits.max_output_bytes = 1 << 20;
        const RunResult run = run_process(
            {"python3", "-c",
             "import sys; compile(sys.stdin.buffer.read().decode('utf-8', 'replace'), "
             "'solution.py', 'exec')"},
            scratch, source, limits);
        if (run.spawn_failed)
            throw SandboxError("python interpreter failed to start: " + run.spawn_error);
        if (!run.ok()) {
            compiled.status = CompileStatus::compile_error;
            compiled.diagnostics = run.timed_out ? "bytecode check timed out"
                                                 : run.err.substr(0, 4096);
            return compiled;
        }
        compiled.status = CompileStatus::not_applicable;
        compiled.artifact = src_path;
        return compiled;
    }

    const auto src_path = scratch / "main.cpp";
    const auto bin_path = scratch / "solution_bin";
    write_file(src_path.string(), source);
    std::vector<std::string> argv = {"g++"};
    for (const auto& f : cpp_compile_flags()) argv.push_back(f);
    argv.push_back(src_path.string());
    argv.push_back("-o");
    argv.push_back(bin_path.string());

    RunLimits limits;
    limits.wall_timeout_s = policy.compile_timeout_s;
    // FSIZE also caps the emitted binary, so leave generous headroom.
    limits.max_output_bytes = 256ull << 20;
    const RunResult run = run_process(argv, scratch, "", limits);
    if (run.spawn_failed) throw SandboxError("compiler failed to start: " + run.spawn_error);
    if (run.timed_out) {
        compiled.status = CompileStatus::compile_error;
        compiled.diagnostics = "compiler timed out";
        return compiled;
    }
    if (!run.exited || run.exit_code != 0) {
        compiled.status = CompileStatus::compile_error;
        compiled.diagnostics = run.err.substr(0, 4096);
        return compiled;
    }
    compiled.status = CompileStatus::ok;
    compiled.artifact = bin_path;
    return compiled;
}

// Feeds the test input on stdin and grades captured stdout. Starter-code
// questions go through the same door: their harness (already part of the
// compiled source) reads the argument payload from stdin and prints the
// serialized return value.
inline TestVerdict run_one_test(const CompiledSolution& compiled, const TestCase& test,
                                std::size_t test_index, [[maybe_unused]] IoMode io_mode,
                                const SandboxPolicy& policy,
                                const std::filesystem::path& scratch) {
    std::filesystem::create_directories(scratch);
    RunLimits limits;
    limits.wall_timeout_s = policy.per_test_timeout_s;
    limits.memory_bytes = policy.memory_limit_bytes;
    limits.max_output_bytes = policy.max_output_bytes;
    const RunResult run = run_process(compiled.run_argv(), scratch, test.input, limits);

    TestVerdict v;
    v.test_index = test_index;
    v.wall_time_s = run.wall_time_s;
    v.stderr_excerpt = run.err.substr(0, 1024);
    if (run.spawn_failed)
        throw SandboxError("test runner failed to start '" + compiled.run_argv().front() +
                           "': " + run.spawn_error);
    if (run.output_limited)
        v.status = TestStatus::output_limit;
    else if (run.timed_out)
        v.status = TestStatus::timeout;
    else if (!run.exited || run.exit_code != 0)
        v.status = TestStatus::runtime_error;
    else
        v.status = normalize_output(run.out) == normalize_output(test.expected_output)
                       ? TestStatus::pass
                       : TestStatus::wrong_answer;
    return v;
}

// Builds a runnable program from a starter-code solution. Supplied by the
// benchmark layer; required whenever a question's io_mode is function_call.
using HarnessSynthesizer = std::function<std::string(const Question&, const std::string& source,
                                                     CodeLanguage)>;

inline ExecutionResult evaluate_source(const Question& question, std::size_t sample_index,
                                       const std::string& solution_source, CodeLanguage lang,
                                       const SandboxPolicy& policy, std::uint64_t seed,
                                       const HarnessSynthesizer& harness = {}) {
    policy.validate();
    const std::vector<TestCase> tests = select_tests(question, seed);

    std::string runnable = solution_source;
    if (question.io_mode == IoMode::function_call) {
        if (!harness)
            throw ValidationError("question " + question.id +
                                  " uses starter-code invocation; a harness synthesizer is "
                                  "required to execute it");
        runnable = harness(question, solution_source, lang);
    }

    ExecutionResult result;
    result.question_id = question.id;
    result.sample_index = sample_index;
    result.code_language = lang;

    TempDir scratch("forge-exec");
    const CompiledSolution compiled = compile_solution(runnable, lang, policy, scratch.path());
    result.compile_status = compiled.status;
    if (compiled.status == CompileStatus::compile_error) {
        result.compile_diagnostics = compiled.diagnostics;
        return result;  // verdicts stay empty, pass_rate 0
    }

    result.test_count = tests.size();
    for (std::size_t i = 0; i < tests.size(); ++i) {
        const auto test_dir = scratch.path() / ("t" + std::to_string(i));
        TestVerdict v = run_one_test(compiled, tests[i], i, question.io_mode, policy, test_dir);
        if (v.status == TestStatus::pass) ++result.pass_count;
        result.verdicts.push_back(std::move(v));
    }
    result.pass_rate =
        static_cast<double>(result.pass_count) / static_cast<double>(result.test_count);
    return result;
}

// JSONL shapes.

inline json verdict_to_json(const TestVerdict& v) {
    return json{{"test_index", v.test_index},
                {"status", to_string(v.status)},
                {"wall_time_s", v.wall_time_s},
                {"stderr_excerpt", v.stderr_excerpt}};
}

inline TestVerdict verdict_from_json(const json& j) {
    TestVerdict v;
    v.test_index = j.at("test_index").get<std::size_t>();
    v.status = test_status_from_string(j.at("status").get<std::string>());
    v.wall_time_s = j.at("wall_time_s").get<double>();
    if (j.contains("stderr_excerpt")) v.stderr_excerpt = j.at("stderr_excerpt").get<std::string>();
    return v;
}

inline json result_to_json(const ExecutionResult& r) {
    json verdicts = json::array();
    for (const auto& v : r.verdicts) verdicts.push_back(verdict_to_json(v));
    json j{{"question_id", r.question_id},
           {"sample_index", r.sample_index},
           {"code_language", to_string(r.code_language)},
           {"compile_status", to_string(r.compile_status)},
           {"pass_count", r.pass_count},
           {"test_count", r.test_count},
           {"pass_rate", r.pass_rate},
           {"verdicts", std::move(verdicts)}};
    if (r.compile_status == CompileStatus::compile_error)
        j["compile_diagnostics"] = r.compile_diagnostics;
    return j;
}

inline ExecutionResult result_from_json(const json& j) {
    ExecutionResult r;
    r.question_id = j.at("question_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<std::size_t>();
    r.code_language = language_from_string(j.at("code_language").get<std::string>());
    r.compile_status = compile_status_from_string(j.at("compile_status").get<std::string>());
    r.pass_count = j.at("pass_count").get<std::size_t>();
    r.test_count = j.at("test_count").get<std::size_t>();
    r.pass_rate = j.at("pass_rate").get<double>();
    for (const auto& jv : j.at("verdicts")) r.verdicts.push_back(verdict_from_json(jv));
    if (j.contains("compile_diagnostics"))
        r.compile_diagnostics = j.at("compile_diagnostics").get<std::string>();
    return r;
}

// One row of the solutions file this module consumes.
struct SolutionRecord {
    std::string question_id;
    std::size_t sample_index = 0;
    CodeLanguage code_language = CodeLanguage::python;
    std::string solution_source;
};

inline SolutionRecord solution_record_from_json(const json& j) {
    SolutionRecord r;
    r.question_id = j.at("question_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<std::size_t>();
    r.code_language = language_from_string(j.at("code_language").get<std::string>());
    r.solution_source = j.at("solution_source").get<std::string>();
    return r;
}

struct BatchOutcome {
    std::vector<ExecutionResult> results;           // one per non-skipped record, input order
    std::vector<std::string> skipped_question_ids;  // too few tests; deduplicated, sorted
};

// Questions failing the minimum-test rule are excluded rather than failing
// the batch. Parallel workers commit results by input position, so the
// output never depends on scheduling.
inline BatchOutcome evaluate_batch(const std::vector<Question>& questions,
                                   const std::vector<SolutionRecord>& records,
                                   const SandboxPolicy& policy, std::uint64_t seed,
                                   std::size_t jobs, const HarnessSynthesizer& harness = {}) {
    policy.validate();
    std::map<std::string, const Question*> by_id;
    for (const auto& q : questions) by_id[q.id] = &q;

    std::vector<const Question*> record_question(records.size());
    std::vector<bool> runnable(records.size(), true);
    BatchOutcome outcome;
    for (std::size_t i = 0; i < records.size(); ++i) {
        auto it = by_id.find(records[i].question_id);
        if (it == by_id.end())
            throw ValidationError("solution references unknown question '" +
                                  records[i].question_id + "'");
        record_question[i] = it->second;
        if (it->second->tests.size() < kMinTests) {
            runnable[i] = false;
            outcome.skipped_question_ids.push_back(it->second->id);
        }
    }
    std::sort(outcome.skipped_question_ids.begin(), outcome.skipped_question_ids.end());
    outcome.skipped_question_ids.erase(
        std::unique(outcome.skipped_question_ids.begin(), outcome.skipped_question_ids.end()),
        outcome.skipped_question_ids.end());

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < records.size(); ++i)
        if (runnable[i]) active.push_back(i);

    outcome.results = parallel_map_ordered<ExecutionResult>(
        active.size(), jobs, [&](std::size_t k) {
            const SolutionRecord& rec = records[active[k]];
            return evaluate_source(*record_question[active[k]], rec.sample_index,
                                   rec.solution_source, rec.code_language, policy, seed, harness);
        });
    return outcome;
}

// Identity of the toolchain behind compile_solution / run_one_test, for run
// manifests: knowing the exact compiler matters when a result is disputed.
inline json toolchain_metadata() {
    TempDir scratch("forge-meta");
    RunLimits limits;
    limits.wall_timeout_s = 20.0;
    limits.max_output_bytes = 1 << 20;
    auto first_line = [](const std::string& s) {
        const auto eol = s.find('\n');
        return eol == std::string::npos ? s : s.substr(0, eol);
    };
    json meta;
    const RunResult gcc = run_process({"g++", "--version"}, scratch.path(), "", limits);
    meta["cpp_compiler"] = gcc.ok() ? first_line(gcc.out) : "unavailable";
    std::string flags;
    for (const auto& f : cpp_compile_flags()) {
        if (!flags.empty()) flags.push_back(' ');
        flags += f;
    }
    meta["cpp_flags"] = flags;
    const RunResult py = run_process({"python3", "--version"}, scratch.path(), "", limits);
    meta["python"] = py.ok() ? first_line(py.out) : "unavailable";
    return meta;
}

}  // namespace forge::exec
