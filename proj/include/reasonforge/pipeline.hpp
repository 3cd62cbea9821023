#pragma once

#include <algorithm>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

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
#include "reasonforge/postproc.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/hash.hpp"
#include "reasonforge/util/jsonl.hpp"

namespace forge::pipeline {

enum class Stage { dedup, decontaminate, generate, postprocess, critique, execute, evaluate };

inline std::string to_string(Stage s) {
    switch (s) {
        case Stage::dedup: return "dedup";
        case Stage::decontaminate: return "decontaminate";
        case Stage::generate: return "generate";
        case Stage::postprocess: return "postprocess";
        case Stage::critique: return "critique";
        case Stage::execute: return "execute";
        case Stage::evaluate: return "evaluate";
    }
    return "unknown";
}

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
    auto it = j.find(key);
    if (it == j.end()) return fallback;
    return it->get<T>();
}

inline const json* section(const json& j, const char* key) {
    auto it = j.find(key);
    if (it == j.end()) return nullptr;
    if (!it->is_object()) throw ValidationError(std::string("config: '") + key + "' must be an object");
    return &*it;
}

}  // namespace detail

struct PipelineConfig {
    std::string run_id = "run";
    std::uint64_t seed = 42;
    std::size_t jobs = 2;
    std::string out_dir;
    std::string questions_path;
    std::string benchmark_items_path;  // empty: decontamination screens against nothing

    std::string provider_kind = "mock";  // mock | http
    std::string mock_script_path;        // optional canned-response script
    std::optional<llm::HttpProviderConfig> http;

    std::string model = "default";

    double dedup_threshold = 0.9;
    double screen_threshold = 0.7;
    std::size_t embed_dims = 256;

    int n_samples = 4;
    std::vector<CodeLanguage> languages = {CodeLanguage::python};
    double temperature = 0.6;
    double top_p = 0.95;
    int solution_max_new_tokens = llm::kSolutionMaxNewTokens;
    int critique_max_new_tokens = llm::kCritiqueMaxNewTokens;

    exec::SandboxPolicy sandbox;
    metrics::ReportOptions report;

    json snapshot;  // raw config as parsed, recorded in every manifest

    void validate() const {
        if (out_dir.empty()) throw ValidationError("config: out_dir is required");
        if (questions_path.empty()) throw ValidationError("config: questions is required");
        if (provider_kind != "mock" && provider_kind != "http")
            throw ValidationError("config: provider.kind must be mock or http, got '" +
                                  provider_kind + "'");
        if (provider_kind == "http") {
            if (!http) throw ValidationError("config: provider.base_url is required for http");
            http->validate();
        }
        if (n_samples < 1) throw ValidationError("config: generate.n_samples must be >= 1");
        if (languages.empty()) throw ValidationError("config: generate.languages must be non-empty");
        std::set<std::string> seen;
        for (CodeLanguage l : languages)
            if (!seen.insert(to_string(l)).second)
                throw ValidationError("config: generate.languages lists " + to_string(l) + " twice");
        if (!(dedup_threshold > 0.0 && dedup_threshold <= 1.0))
            throw ValidationError("config: dedup.threshold must be in (0, 1]");
        if (!(screen_threshold >= -1.0 && screen_threshold <= 1.0))
            throw ValidationError("config: decontaminate.screen_threshold must be in [-1, 1]");
        if (embed_dims == 0) throw ValidationError("config: decontaminate.embed_dims must be >= 1");
        if (solution_max_new_tokens < 1 || critique_max_new_tokens < 1)
            throw ValidationError("config: max_new_tokens must be >= 1");
        if (jobs < 1) throw ValidationError("config: jobs must be >= 1");
        if (report.k < 1) throw ValidationError("config: evaluate.k must be >= 1");
        if (report.n_resamples < 1) throw ValidationError("config: evaluate.n_resamples must be >= 1");
        sandbox.validate();
    }
};

inline PipelineConfig config_from_json(const json& j) {
    PipelineConfig cfg;
    cfg.snapshot = j;
    cfg.run_id = detail::get_or<std::string>(j, "run_id", cfg.run_id);
    cfg.seed = detail::get_or<std::uint64_t>(j, "seed", cfg.seed);
    cfg.jobs = detail::get_or<std::size_t>(j, "jobs", cfg.jobs);
    cfg.out_dir = detail::get_or<std::string>(j, "out_dir", "");
    cfg.questions_path = detail::get_or<std::string>(j, "questions", "");
    cfg.benchmark_items_path = detail::get_or<std::string>(j, "benchmark_items", "");
    cfg.model = detail::get_or<std::string>(j, "model", cfg.model);

    if (const json* p = detail::section(j, "provider")) {
        cfg.provider_kind = detail::get_or<std::string>(*p, "kind", "mock");
        cfg.mock_script_path = detail::get_or<std::string>(*p, "script", "");
        if (cfg.provider_kind == "http") cfg.http = llm::HttpProviderConfig::from_json(*p);
    }
    if (const json* d = detail::section(j, "dedup"))
        cfg.dedup_threshold = detail::get_or<double>(*d, "threshold", cfg.dedup_threshold);
    if (const json* d = detail::section(j, "decontaminate")) {
        cfg.screen_threshold =
            detail::get_or<double>(*d, "screen_threshold", cfg.screen_threshold);
        cfg.embed_dims = detail::get_or<std::size_t>(*d, "embed_dims", cfg.embed_dims);
    }
    if (const json* g = detail::section(j, "generate")) {
        cfg.n_samples = detail::get_or<int>(*g, "n_samples", cfg.n_samples);
        cfg.temperature = detail::get_or<double>(*g, "temperature", cfg.temperature);
        cfg.top_p = detail::get_or<double>(*g, "top_p", cfg.top_p);
        cfg.solution_max_new_tokens =
            detail::get_or<int>(*g, "max_new_tokens", cfg.solution_max_new_tokens);
        if (g->contains("languages")) {
            cfg.languages.clear();
            if (!g->at("languages").is_array())
                throw ValidationError("config: generate.languages must be an array");
            for (const auto& l : g->at("languages"))
                cfg.languages.push_back(language_from_string(l.get<std::string>()));
        }
    }
    if (const json* c = detail::section(j, "critique"))
        cfg.critique_max_new_tokens =
            detail::get_or<int>(*c, "max_new_tokens", cfg.critique_max_new_tokens);
    if (const json* e = detail::section(j, "execute")) {
        cfg.sandbox.per_test_timeout_s =
            detail::get_or<double>(*e, "per_test_timeout_s", cfg.sandbox.per_test_timeout_s);
        cfg.sandbox.memory_limit_bytes =
            detail::get_or<std::uint64_t>(*e, "memory_limit_bytes", cfg.sandbox.memory_limit_bytes);
        cfg.sandbox.max_output_bytes =
            detail::get_or<std::uint64_t>(*e, "max_output_bytes", cfg.sandbox.max_output_bytes);
        cfg.sandbox.compile_timeout_s =
            detail::get_or<double>(*e, "compile_timeout_s", cfg.sandbox.compile_timeout_s);
    }
    if (const json* e = detail::section(j, "evaluate")) {
        cfg.report.k = detail::get_or<std::size_t>(*e, "k", cfg.report.k);
        cfg.report.n_resamples =
            detail::get_or<std::size_t>(*e, "n_resamples", cfg.report.n_resamples);
        cfg.report.seed = detail::get_or<std::uint64_t>(*e, "seed", cfg.report.seed);
        if (e->contains("strategy"))
            cfg.report.strategy =
                metrics::strategy_from_string(e->at("strategy").get<std::string>());
    }
    cfg.validate();
    return cfg;
}

inline PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open config " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ValidationError(path + ": " + e.what());
    }
    return config_from_json(j);
}

// Output layout under out_dir. One file per stage product; manifests live in
// a subdirectory named by stage order.
struct PipelinePaths {
    std::filesystem::path out;

    std::filesystem::path manifest_dir() const { return out / "manifests"; }
    std::filesystem::path manifest(int index, const std::string& name) const {
        char prefix[8];
        std::snprintf(prefix, sizeof prefix, "%02d_", index);
        return manifest_dir() / (prefix + name + ".json");
    }
    std::filesystem::path questions_deduped() const { return out / "questions.deduped.jsonl"; }
    std::filesystem::path dedup_clusters() const { return out / "dedup.clusters.jsonl"; }
    std::filesystem::path questions_clean() const { return out / "questions.clean.jsonl"; }
    std::filesystem::path decontam_verdicts() const { return out / "decontam.verdicts.jsonl"; }
    std::filesystem::path solutions_raw() const { return out / "solutions.raw.jsonl"; }
    std::filesystem::path solutions() const { return out / "solutions.jsonl"; }
    std::filesystem::path solutions_rejected() const { return out / "solutions.rejected.jsonl"; }
    std::filesystem::path critiques_raw() const { return out / "critiques.raw.jsonl"; }
    std::filesystem::path critiques() const { return out / "critiques.jsonl"; }
    std::filesystem::path critiques_rejected() const { return out / "critiques.rejected.jsonl"; }
    std::filesystem::path results() const { return out / "results.jsonl"; }
    std::filesystem::path pools() const { return out / "pools.jsonl"; }
    std::filesystem::path report() const { return out / "report.json"; }
    std::filesystem::path dataset() const { return out / "dataset.jsonl"; }
};

namespace detail {

inline std::string iso_utc_now() {
    std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

// One raw model response, before post-processing.
struct RawRow {
    std::string question_id;
    std::size_t sample_index = 0;
    CodeLanguage code_language = CodeLanguage::python;
    std::string text;
    llm::FinishReason finish_reason = llm::FinishReason::stop;
};

inline json raw_row_to_json(const RawRow& r) {
    return json{{"question_id", r.question_id},
                {"sample_index", r.sample_index},
                {"code_language", to_string(r.code_language)},
                {"text", r.text},
                {"finish_reason", to_string(r.finish_reason)}};
}

inline RawRow raw_row_from_json(const json& j) {
    RawRow r;
    r.question_id = j.at("question_id").get<std::string>();
    r.sample_index = j.at("sample_index").get<std::size_t>();
    r.code_language = language_from_string(j.at("code_language").get<std::string>());
    r.text = j.at("text").get<std::string>();
    r.finish_reason = llm::finish_reason_from_string(j.at("finish_reason").get<std::string>());
    return r;
}

inline std::vector<json> read_jsonl_if_exists(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return {};
    return read_jsonl(path.string());
}

}  // namespace detail

// Stage outputs joined on (question_id, sample_index) for scoring and
// dataset emission.
struct JoinedTables {
    std::vector<Question> questions;
    std::map<std::string, const Question*> question_by_id;
    std::vector<json> solutions;  // accepted solution rows, file order

    struct CritiqueRow {
        postproc::Judgment judgment;
        std::size_t trace_length;
        std::string trace;
    };
    std::map<std::pair<std::string, std::size_t>, CritiqueRow> critiques;
    std::map<std::pair<std::string, std::size_t>, exec::ExecutionResult> results;
};

inline JoinedTables load_tables(const std::string& questions_path,
                                const std::string& solutions_path,
                                const std::string& critiques_path,
                                const std::string& results_path) {
    JoinedTables t;
    t.questions = load_questions(questions_path);
    for (const auto& q : t.questions) t.question_by_id[q.id] = &q;
    t.solutions = read_jsonl(solutions_path);

    if (!critiques_path.empty())
        for (const auto& row : detail::read_jsonl_if_exists(critiques_path)) {
            const std::pair<std::string, std::size_t> key{
                row.at("question_id").get<std::string>(),
                row.at("sample_index").get<std::size_t>()};
            if (!t.critiques
                     .emplace(key, JoinedTables::CritiqueRow{
                                       postproc::judgment_from_string(
                                           row.at("judgment").get<std::string>()),
                                       row.at("trace_length").get<std::size_t>(),
                                       row.at("critique_trace").get<std::string>()})
                     .second)
                throw ValidationError("duplicate critique for (" + key.first + ", " +
                                      std::to_string(key.second) + ")");
        }

    if (!results_path.empty())
        for (const auto& row : detail::read_jsonl_if_exists(results_path)) {
            auto r = exec::result_from_json(row);
            const std::pair<std::string, std::size_t> key{r.question_id, r.sample_index};
            if (!t.results.emplace(key, std::move(r)).second)
                throw ValidationError("duplicate execution result for (" + key.first + ", " +
                                      std::to_string(key.second) + ")");
        }
    return t;
}

struct PoolBuild {
    std::vector<metrics::SamplePool> pools;
    std::size_t pool_samples = 0;
    std::size_t samples_without_result = 0;    // question skipped by the min-test rule
    std::size_t samples_without_critique = 0;  // critique rejected by the filter
};

// A pool sample needs the full chain: accepted solution, accepted critique,
// and an execution verdict. Incomplete samples are counted, not scored.
inline PoolBuild build_pools(const JoinedTables& t) {
    PoolBuild b;
    std::map<std::string, metrics::SamplePool> by_id;
    std::vector<std::string> order;
    std::set<std::pair<std::string, std::size_t>> seen;
    for (const auto& srow : t.solutions) {
        const std::pair<std::string, std::size_t> key{
            srow.at("question_id").get<std::string>(),
            srow.at("sample_index").get<std::size_t>()};
        if (!seen.insert(key).second)
            throw ValidationError("duplicate solution sample (" + key.first + ", " +
                                  std::to_string(key.second) + ")");
        auto rit = t.results.find(key);
        if (rit == t.results.end()) {
            ++b.samples_without_result;
            continue;
        }
        auto cit = t.critiques.find(key);
        if (cit == t.critiques.end()) {
            ++b.samples_without_critique;
            continue;
        }
        auto pit = by_id.find(key.first);
        if (pit == by_id.end()) {
            auto qit = t.question_by_id.find(key.first);
            if (qit == t.question_by_id.end())
                throw ValidationError("unknown question id '" + key.first + "'");
            metrics::SamplePool pool;
            pool.question_id = key.first;
            pool.difficulty = qit->second->difficulty;
            pit = by_id.emplace(key.first, std::move(pool)).first;
            order.push_back(key.first);
        }
        metrics::PoolSample s;
        s.sample_index = key.second;
        s.is_correct = rit->second.correct();
        s.judgment = cit->second.judgment;
        s.critique_trace_length = cit->second.trace_length;
        pit->second.samples.push_back(std::move(s));
        ++b.pool_samples;
    }
    for (const auto& qid : order) b.pools.push_back(by_id.at(qid));
    return b;
}

// One row per accepted solution; critique fields appear when the critique
// parsed, pass_rate when the question ran. Returns the row count.
inline std::size_t emit_dataset(const JoinedTables& t, const std::string& out_path) {
    JsonlWriter w(out_path);
    std::size_t triples = 0;
    std::set<std::pair<std::string, std::size_t>> seen;
    for (const auto& srow : t.solutions) {
        const std::pair<std::string, std::size_t> key{
            srow.at("question_id").get<std::string>(),
            srow.at("sample_index").get<std::size_t>()};
        if (!seen.insert(key).second)
            throw ValidationError("dataset: duplicate join key (" + key.first + ", " +
                                  std::to_string(key.second) + ")");
        auto qit = t.question_by_id.find(key.first);
        if (qit == t.question_by_id.end())
            throw ValidationError("dataset: unknown question id '" + key.first + "'");
        json row{{"question_id", key.first},
                 {"sample_index", key.second},
                 {"source", to_string(qit->second->source)},
                 {"code_language", srow.at("code_language")},
                 {"solution_reasoning", srow.at("reasoning_trace")},
                 {"solution_source", srow.at("solution_source")}};
        if (auto cit = t.critiques.find(key); cit != t.critiques.end()) {
            row["critique_reasoning"] = cit->second.trace;
            row["judgment"] = postproc::to_string(cit->second.judgment);
        }
        if (auto rit = t.results.find(key); rit != t.results.end())
            row["pass_rate"] = rit->second.pass_rate;
        w.write(row);
        ++triples;
    }
    if (triples != t.solutions.size())
        throw ValidationError("dataset: emitted " + std::to_string(triples) + " rows for " +
                              std::to_string(t.solutions.size()) + " accepted solutions");
    return triples;
}

// Runs the stages in order, writing one manifest per stage. A stage whose
// manifest records the same config digest and the same input/output content
// hashes is skipped, which is what makes interrupted runs resumable; a stage
// body that throws still gets a manifest (status failed) describing whatever
// partial outputs exist.
class Runner {
public:
    explicit Runner(PipelineConfig cfg, std::ostream* log = nullptr)
        : cfg_(std::move(cfg)), paths_{cfg_.out_dir}, log_(log) {
        cfg_.validate();
        if (cfg_.provider_kind == "http") {
            provider_ = std::make_unique<llm::HttpProvider>(*cfg_.http);
        } else if (!cfg_.mock_script_path.empty()) {
            provider_ = std::make_unique<llm::MockProvider>(
                llm::MockScript::load_file(cfg_.mock_script_path));
        } else {
            provider_ = std::make_unique<llm::MockProvider>();
        }
        config_digest_ = sha256_hex(cfg_.snapshot.dump());
    }

    const PipelinePaths& paths() const { return paths_; }

    // Returns a run summary: per-stage status plus the manifest locations.
    json run() {
        namespace fs = std::filesystem;
        fs::create_directories(paths_.manifest_dir());

        json stages = json::array();
        run_stage(1, Stage::dedup, "dedup", {cfg_.questions_path},
                  {paths_.questions_deduped(), paths_.dedup_clusters()},
                  [this] { return stage_dedup(); }, stages);
        std::vector<std::string> decon_inputs = {paths_.questions_deduped().string()};
        if (!cfg_.benchmark_items_path.empty()) decon_inputs.push_back(cfg_.benchmark_items_path);
        run_stage(2, Stage::decontaminate, "decontaminate", decon_inputs,
                  {paths_.questions_clean(), paths_.decontam_verdicts()},
                  [this] { return stage_decontaminate(); }, stages);
        run_stage(3, Stage::generate, "generate_solutions", {paths_.questions_clean().string()},
                  {paths_.solutions_raw()}, [this] { return stage_generate_solutions(); }, stages);
        run_stage(4, Stage::postprocess, "postprocess_solutions",
                  {paths_.solutions_raw().string()},
                  {paths_.solutions(), paths_.solutions_rejected()},
                  [this] { return stage_postprocess_solutions(); }, stages);
        run_stage(5, Stage::critique, "generate_critiques",
                  {paths_.questions_clean().string(), paths_.solutions().string()},
                  {paths_.critiques_raw()}, [this] { return stage_generate_critiques(); }, stages);
        run_stage(6, Stage::postprocess, "postprocess_critiques",
                  {paths_.critiques_raw().string()},
                  {paths_.critiques(), paths_.critiques_rejected()},
                  [this] { return stage_postprocess_critiques(); }, stages);
        run_stage(7, Stage::execute, "execute",
                  {paths_.questions_clean().string(), paths_.solutions().string()},
                  {paths_.results()}, [this] { return stage_execute(); }, stages);
        run_stage(8, Stage::evaluate, "evaluate",
                  {paths_.questions_clean().string(), paths_.solutions().string(),
                   paths_.critiques().string(), paths_.results().string()},
                  {paths_.pools(), paths_.report(), paths_.dataset()},
                  [this] { return stage_evaluate(); }, stages);

        return json{{"run_id", cfg_.run_id}, {"out_dir", cfg_.out_dir}, {"stages", stages}};
    }

private:
    static std::vector<std::string> to_strings(const std::vector<std::filesystem::path>& ps) {
        std::vector<std::string> out;
        for (const auto& p : ps) out.push_back(p.string());
        return out;
    }

    void log(const std::string& msg) {
        if (log_) *log_ << msg << "\n";
    }

    static json digest_map(const std::vector<std::string>& paths, bool missing_ok) {
        json m = json::object();
        for (const auto& p : paths) {
            if (!std::filesystem::exists(p)) {
                if (missing_ok) continue;
                throw ValidationError("pipeline: missing file " + p);
            }
            m[p] = sha256_file_hex(p);
        }
        return m;
    }

    bool stage_up_to_date(const std::filesystem::path& manifest_path,
                          const std::vector<std::string>& inputs,
                          const std::vector<std::string>& outputs) const {
        std::ifstream in(manifest_path);
        if (!in) return false;
        json m;
        try {
            m = json::parse(in);
        } catch (...) {
            return false;
        }
        if (m.value("status", "") != "complete") return false;
        if (m.value("config_digest", "") != config_digest_) return false;
        auto matches = [&](const char* key, const std::vector<std::string>& paths) {
            if (!m.contains(key) || !m.at(key).is_object()) return false;
            const json& recorded = m.at(key);
            if (recorded.size() != paths.size()) return false;
            for (const auto& p : paths) {
                if (!recorded.contains(p)) return false;
                if (!std::filesystem::exists(p)) return false;
                if (recorded.at(p).get<std::string>() != sha256_file_hex(p)) return false;
            }
            return true;
        };
        return matches("inputs", inputs) && matches("outputs", outputs);
    }

    template <class Body>
    void run_stage(int index, Stage stage, const std::string& name,
                   const std::vector<std::string>& inputs,
                   const std::vector<std::filesystem::path>& output_paths, Body body,
                   json& stages) {
        const std::vector<std::string> outputs = to_strings(output_paths);
        const auto manifest_path = paths_.manifest(index, name);
        if (stage_up_to_date(manifest_path, inputs, outputs)) {
            log("stage " + std::to_string(index) + " " + name + ": up to date, skipping");
            stages.push_back(json{{"name", name}, {"status", "skipped"},
                                  {"manifest", manifest_path.string()}});
            return;
        }

        json manifest{{"run_id", cfg_.run_id},
                      {"stage", to_string(stage)},
                      {"name", name},
                      {"index", index},
                      {"config_digest", config_digest_},
                      {"config", cfg_.snapshot},
                      {"seeds", json{{"pipeline", cfg_.seed}, {"metrics", cfg_.report.seed}}},
                      {"provider", provider_->name()},
                      {"started_at", detail::iso_utc_now()}};
        log("stage " + std::to_string(index) + " " + name + ": running");
        try {
            manifest["inputs"] = digest_map(inputs, false);
            manifest["counts"] = body();
            manifest["outputs"] = digest_map(outputs, false);
            manifest["status"] = "complete";
        } catch (const std::exception& e) {
            manifest["status"] = "failed";
            manifest["error"] = e.what();
            manifest["outputs"] = digest_map(outputs, true);  // partial progress
            manifest["finished_at"] = detail::iso_utc_now();
            write_manifest(manifest_path, manifest);
            throw;
        }
        manifest["finished_at"] = detail::iso_utc_now();
        write_manifest(manifest_path, manifest);
        stages.push_back(json{{"name", name}, {"status", "complete"},
                              {"manifest", manifest_path.string()}});
    }

    static void write_manifest(const std::filesystem::path& path, const json& manifest) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write manifest " + path.string());
        out << manifest.dump(2) << "\n";
    }

    llm::GenerateOptions gen_opts() const {
        llm::GenerateOptions g;
        g.model = cfg_.model;
        g.jobs = cfg_.jobs;
        return g;
    }

    // ---- stage bodies; each returns its counts and asserts nothing is
    // silently dropped (in = kept + removed, with reasons on the removed side).

    json stage_dedup() {
        const auto questions = load_questions(cfg_.questions_path);
        const auto result = corpus::dedup(questions, cfg_.dedup_threshold);
        save_questions(paths_.questions_deduped().string(), result.retained);
        JsonlWriter w(paths_.dedup_clusters().string());
        for (const auto& c : result.clusters) w.write(corpus::cluster_to_json(c));
        const std::size_t removed = questions.size() - result.retained.size();
        if (result.retained.size() + removed != questions.size())
            throw ValidationError("dedup: record count mismatch");
        return json{{"in", questions.size()},
                    {"retained", result.retained.size()},
                    {"removed", removed},
                    {"clusters", result.clusters.size()}};
    }

    json stage_decontaminate() {
        const auto questions = load_questions(paths_.questions_deduped().string());
        std::vector<corpus::BenchmarkItem> items;
        if (!cfg_.benchmark_items_path.empty())
            items = corpus::load_benchmark_items(cfg_.benchmark_items_path);
        corpus::NgramHashEmbedder embedder(cfg_.embed_dims);
        llm::CompletionJudge judge(*provider_, gen_opts());
        corpus::DecontaminateOptions opts;
        opts.screen_threshold = cfg_.screen_threshold;
        opts.jobs = cfg_.jobs;
        const auto result = corpus::decontaminate(questions, items, embedder, judge, opts);
        save_questions(paths_.questions_clean().string(), result.retained);
        JsonlWriter w(paths_.decontam_verdicts().string());
        for (const auto& v : result.verdicts) w.write(corpus::verdict_to_json(v));
        if (result.retained.size() + result.removed.size() != questions.size() ||
            result.verdicts.size() != questions.size())
            throw ValidationError("decontaminate: verdicts do not partition the input");
        return json{{"in", questions.size()},
                    {"retained", result.retained.size()},
                    {"removed", result.removed.size()},
                    {"benchmark_items", items.size()}};
    }

    // Sample index space: language block l gets indexes [l*n, (l+1)*n), so
    // (question_id, sample_index) is unique across the whole run.
    json stage_generate_solutions() {
        const auto questions = load_questions(paths_.questions_clean().string());
        const auto n = static_cast<std::size_t>(cfg_.n_samples);

        // Re-runs after a provider failure keep any fully generated
        // (question, language) block from the interrupted file.
        std::map<std::pair<std::string, std::string>, std::vector<detail::RawRow>> kept;
        for (const auto& row : detail::read_jsonl_if_exists(paths_.solutions_raw())) {
            auto r = detail::raw_row_from_json(row);
            kept[{r.question_id, to_string(r.code_language)}].push_back(std::move(r));
        }
        for (auto& [key, block] : kept)
            std::sort(block.begin(), block.end(),
                      [](const detail::RawRow& a, const detail::RawRow& b) {
                          return a.sample_index < b.sample_index;
                      });
        auto block_complete = [n](const std::vector<detail::RawRow>& block, std::size_t base) {
            if (block.size() != n) return false;
            for (std::size_t i = 0; i < n; ++i)
                if (block[i].sample_index != base + i) return false;
            return true;
        };

        JsonlWriter w(paths_.solutions_raw().string());
        std::size_t rows = 0, provider_calls = 0, reused = 0;
        for (const auto& q : questions) {
            for (std::size_t li = 0; li < cfg_.languages.size(); ++li) {
                const CodeLanguage lang = cfg_.languages[li];
                const std::size_t base = li * n;
                if (auto it = kept.find({q.id, to_string(lang)});
                    it != kept.end() && block_complete(it->second, base)) {
                    for (const auto& r : it->second) w.write(detail::raw_row_to_json(r));
                    rows += it->second.size();
                    ++reused;
                    continue;
                }
                llm::SamplingParams params;
                params.temperature = cfg_.temperature;
                params.top_p = cfg_.top_p;
                params.max_new_tokens = cfg_.solution_max_new_tokens;
                params.n_samples = cfg_.n_samples;
                params.seed = cfg_.seed;
                const auto responses =
                    llm::generate(llm::render_solution_prompt(q, lang), params, *provider_,
                                  gen_opts());
                ++provider_calls;
                for (std::size_t i = 0; i < responses.size(); ++i) {
                    detail::RawRow r{q.id, base + i, lang, responses[i].text,
                                     responses[i].finish_reason};
                    w.write(detail::raw_row_to_json(r));
                    ++rows;
                }
                w.flush();
            }
        }
        const std::size_t expected = questions.size() * cfg_.languages.size() * n;
        if (rows != expected)
            throw ValidationError("generate: wrote " + std::to_string(rows) + " rows, expected " +
                                  std::to_string(expected));
        return json{{"questions", questions.size()},
                    {"rows", rows},
                    {"provider_calls", provider_calls},
                    {"reused_blocks", reused}};
    }

    json stage_postprocess_solutions() {
        const auto rows = detail::read_jsonl_if_exists(paths_.solutions_raw());
        JsonlWriter accepted(paths_.solutions().string());
        JsonlWriter rejected(paths_.solutions_rejected().string());
        std::size_t n_in = 0, n_ok = 0, n_bad = 0;
        for (const auto& row : rows) {
            ++n_in;
            const auto r = detail::raw_row_from_json(row);
            llm::RawResponse raw;
            raw.text = r.text;
            raw.finish_reason = r.finish_reason;
            const auto parse = postproc::parse_solution_response(raw, r.code_language);
            if (parse.outcome.accepted) {
                accepted.write(
                    postproc::solution_record(r.question_id, r.sample_index, *parse.solution));
                ++n_ok;
            } else {
                rejected.write(postproc::rejection_record(r.question_id, r.sample_index,
                                                          "solution", r.code_language,
                                                          *parse.outcome.reject_reason));
                ++n_bad;
            }
        }
        if (n_ok + n_bad != n_in)
            throw ValidationError("postprocess_solutions: records dropped without a reason");
        return json{{"in", n_in}, {"accepted", n_ok}, {"rejected", n_bad}};
    }

    json stage_generate_critiques() {
        const auto questions = load_questions(paths_.questions_clean().string());
        std::map<std::string, const Question*> by_id;
        for (const auto& q : questions) by_id[q.id] = &q;

        const auto solutions = detail::read_jsonl_if_exists(paths_.solutions());

        std::map<std::pair<std::string, std::size_t>, detail::RawRow> kept;
        for (const auto& row : detail::read_jsonl_if_exists(paths_.critiques_raw())) {
            auto r = detail::raw_row_from_json(row);
            kept[{r.question_id, r.sample_index}] = std::move(r);
        }

        JsonlWriter w(paths_.critiques_raw().string());
        std::size_t rows = 0, provider_calls = 0, reused = 0;
        for (const auto& srow : solutions) {
            const std::string qid = srow.at("question_id").get<std::string>();
            const auto sidx = srow.at("sample_index").get<std::size_t>();
            const auto lang = language_from_string(srow.at("code_language").get<std::string>());
            if (auto it = kept.find({qid, sidx}); it != kept.end()) {
                w.write(detail::raw_row_to_json(it->second));
                ++rows;
                ++reused;
                continue;
            }
            auto qit = by_id.find(qid);
            if (qit == by_id.end())
                throw ValidationError("critique: unknown question id '" + qid + "'");
            llm::SamplingParams params;
            params.temperature = cfg_.temperature;
            params.top_p = cfg_.top_p;
            params.max_new_tokens = cfg_.critique_max_new_tokens;
            params.n_samples = 1;
            params.seed = cfg_.seed;
            const auto responses = llm::generate(
                llm::render_critique_prompt(*qit->second,
                                            srow.at("solution_source").get<std::string>()),
                params, *provider_, gen_opts());
            ++provider_calls;
            detail::RawRow r{qid, sidx, lang, responses.front().text,
                             responses.front().finish_reason};
            w.write(detail::raw_row_to_json(r));
            w.flush();
            ++rows;
        }
        if (rows != solutions.size())
            throw ValidationError("critique: wrote " + std::to_string(rows) +
                                  " rows for " + std::to_string(solutions.size()) + " solutions");
        return json{{"in", solutions.size()},
                    {"rows", rows},
                    {"provider_calls", provider_calls},
                    {"reused_rows", reused}};
    }

    json stage_postprocess_critiques() {
        const auto rows = detail::read_jsonl_if_exists(paths_.critiques_raw());
        JsonlWriter accepted(paths_.critiques().string());
        JsonlWriter rejected(paths_.critiques_rejected().string());
        std::size_t n_in = 0, n_ok = 0, n_bad = 0;
        for (const auto& row : rows) {
            ++n_in;
            const auto r = detail::raw_row_from_json(row);
            llm::RawResponse raw;
            raw.text = r.text;
            raw.finish_reason = r.finish_reason;
            const auto parse = postproc::parse_critique_response(raw);
            if (parse.outcome.accepted) {
                accepted.write(
                    postproc::critique_record(r.question_id, r.sample_index, *parse.critique));
                ++n_ok;
            } else {
                rejected.write(postproc::rejection_record(r.question_id, r.sample_index,
                                                          "critique", r.code_language,
                                                          *parse.outcome.reject_reason));
                ++n_bad;
            }
        }
        if (n_ok + n_bad != n_in)
            throw ValidationError("postprocess_critiques: records dropped without a reason");
        return json{{"in", n_in}, {"accepted", n_ok}, {"rejected", n_bad}};
    }

    json stage_execute() {
        const auto questions = load_questions(paths_.questions_clean().string());
        std::vector<exec::SolutionRecord> records;
        for (const auto& row : detail::read_jsonl_if_exists(paths_.solutions()))
            records.push_back(exec::solution_record_from_json(row));
        const auto outcome = exec::evaluate_batch(questions, records, cfg_.sandbox, cfg_.seed,
                                                  cfg_.jobs, bench::harness_synthesizer());
        JsonlWriter w(paths_.results().string());
        for (const auto& r : outcome.results) w.write(exec::result_to_json(r));
        std::size_t skipped_records = 0;
        {
            std::set<std::string> skipped(outcome.skipped_question_ids.begin(),
                                          outcome.skipped_question_ids.end());
            for (const auto& r : records) skipped_records += skipped.count(r.question_id);
        }
        if (outcome.results.size() + skipped_records != records.size())
            throw ValidationError("execute: results do not account for every record");
        json counts{{"in", records.size()},
                    {"executed", outcome.results.size()},
                    {"skipped_records", skipped_records},
                    {"skipped_questions", outcome.skipped_question_ids},
                    {"toolchain", exec::toolchain_metadata()}};
        return counts;
    }

    json stage_evaluate() {
        const auto tables =
            load_tables(paths_.questions_clean().string(), paths_.solutions().string(),
                        paths_.critiques().string(), paths_.results().string());
        auto built = build_pools(tables);
        if (built.pools.empty())
            throw ValidationError("evaluate: no fully processed samples to score");
        for (const auto& p : built.pools)
            if (p.samples.size() < cfg_.report.k)
                throw ValidationError("evaluate: question '" + p.question_id + "' has " +
                                      std::to_string(p.samples.size()) +
                                      " scored samples but evaluate.k = " +
                                      std::to_string(cfg_.report.k) +
                                      "; lower k or raise n_samples");

        JsonlWriter pw(paths_.pools().string());
        for (const auto& p : built.pools) pw.write(metrics::pool_to_json(p));

        const json report = metrics::build_report(built.pools, cfg_.report);
        {
            std::ofstream out(paths_.report(), std::ios::binary | std::ios::trunc);
            if (!out) throw ValidationError("cannot write " + paths_.report().string());
            out << report.dump(2) << "\n";
        }

        const std::size_t triples = emit_dataset(tables, paths_.dataset().string());
        return json{{"solutions_in", tables.solutions.size()},
                    {"triples", triples},
                    {"pool_questions", built.pools.size()},
                    {"pool_samples", built.pool_samples},
                    {"samples_without_result", built.samples_without_result},
                    {"samples_without_critique", built.samples_without_critique}};
    }

    PipelineConfig cfg_;
    PipelinePaths paths_;
    std::ostream* log_;
    std::unique_ptr<llm::CompletionProvider> provider_;
    std::string config_digest_;
};

inline json run_pipeline(const std::string& config_path, std::ostream* log = nullptr) {
    Runner runner(load_config(config_path), log);
    return runner.run();
}

}  // namespace forge::pipeline
