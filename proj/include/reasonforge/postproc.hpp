#pragma once

#include <cctype>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "reasonforge/errors.hpp"
#include "reasonforge/llm_client.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/fs.hpp"
#include "reasonforge/util/jsonl.hpp"
#include "reasonforge/util/subprocess.hpp"
#include "reasonforge/util/unicode.hpp"

namespace forge::postproc {

enum class RejectReason {
    missing_think,
    missing_code_block,
    syntax_invalid,
    missing_judgment,
    non_binary_judgment,
    truncated,
};

inline std::string to_string(RejectReason r) {
    switch (r) {
        case RejectReason::missing_think: return "missing_think";
        case RejectReason::missing_code_block: return "missing_code_block";
        case RejectReason::syntax_invalid: return "syntax_invalid";
        case RejectReason::missing_judgment: return "missing_judgment";
        case RejectReason::non_binary_judgment: return "non_binary_judgment";
        case RejectReason::truncated: return "truncated";
    }
    return "truncated";
}

inline RejectReason reject_reason_from_string(const std::string& s) {
    if (s == "missing_think") return RejectReason::missing_think;
    if (s == "missing_code_block") return RejectReason::missing_code_block;
    if (s == "syntax_invalid") return RejectReason::syntax_invalid;
    if (s == "missing_judgment") return RejectReason::missing_judgment;
    if (s == "non_binary_judgment") return RejectReason::non_binary_judgment;
    if (s == "truncated") return RejectReason::truncated;
    throw ValidationError("unknown reject_reason: " + s);
}

struct FilterOutcome {
    bool accepted = false;
    std::optional<RejectReason> reject_reason;

    static FilterOutcome accept() { return {true, std::nullopt}; }
    static FilterOutcome reject(RejectReason r) { return {false, r}; }
};

struct ThinkSplit {
    std::string reasoning_trace;
    std::string answer_text;
};

// Splits a response into its reasoning span and the remainder. Strict on
// purpose: the span must open at byte 0 and occur exactly once, so that
// "<think>" + reasoning_trace + "</think>" + answer_text reassembles the
// original bytes. Nothing is repaired; any other shape is a reject.
inline std::optional<ThinkSplit> extract_think(std::string_view text) {
    constexpr std::string_view kOpen = "<think>";
    constexpr std::string_view kClose = "</think>";
    if (text.substr(0, kOpen.size()) != kOpen) return std::nullopt;
    const std::size_t close = text.find(kClose, kOpen.size());
    if (close == std::string_view::npos) return std::nullopt;
    const std::string_view trace = text.substr(kOpen.size(), close - kOpen.size());
    if (trace.find(kOpen) != std::string_view::npos) return std::nullopt;  // nested open
    const std::string_view rest = text.substr(close + kClose.size());
    if (rest.find(kOpen) != std::string_view::npos ||
        rest.find(kClose) != std::string_view::npos)
        return std::nullopt;  // repeated span
    return ThinkSplit{std::string(trace), std::string(rest)};
}

struct CodeBlock {
    CodeLanguage code_language;
    std::string source;
};

// All ```python / ```cpp fenced blocks in document order, fence lines
// excluded. Other fences (```, ```text, ...) are tracked so their contents
// cannot masquerade as new openings, but they are not returned. A fence left
// open at end of input yields no block.
inline std::vector<CodeBlock> extract_code_blocks(std::string_view text) {
    std::vector<CodeBlock> blocks;
    bool in_fence = false;
    bool tracked = false;
    CodeLanguage lang = CodeLanguage::python;
    std::string source;
    bool first_line = true;

    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        const bool last = eol == std::string_view::npos;
        std::string_view line = text.substr(pos, last ? text.size() - pos : eol - pos);
        if (last && line.empty() && !first_line) break;  // no phantom line after final \n
        first_line = false;

        std::string_view stripped = line;
        while (!stripped.empty() &&
               (stripped.back() == '\r' || stripped.back() == ' ' || stripped.back() == '\t'))
            stripped.remove_suffix(1);

        if (!in_fence) {
            if (stripped.rfind("```", 0) == 0) {
                in_fence = true;
                source.clear();
                if (stripped == "```python") {
                    tracked = true;
                    lang = CodeLanguage::python;
                } else if (stripped == "```cpp") {
                    tracked = true;
                    lang = CodeLanguage::cpp;
                } else {
                    tracked = false;
                }
            }
        } else if (stripped == "```") {
            if (tracked) blocks.push_back({lang, source});
            in_fence = false;
            tracked = false;
        } else if (tracked) {
            if (!source.empty()) source.push_back('\n');
            source.append(line);
        }

        if (last) break;
        pos = eol + 1;
    }
    return blocks;
}

// How sources are checked for parse validity: each language hands the text
// to its toolchain front end on stdin and trusts the exit status.
struct SyntaxToolchain {
    std::vector<std::string> python_argv = {
        "python3", "-c",
        "import sys; compile(sys.stdin.buffer.read().decode('utf-8', 'replace'), '<solution>', "
        "'exec')"};
    std::vector<std::string> cpp_argv = {"g++", "-x",
                                         "c++", "-std=gnu++17",
                                         "-fsyntax-only", "-"};
    double timeout_s = 30.0;
};

// True iff the source parses cleanly as a full program/module in the given
// language. Blank sources are invalid by decision: an empty code block is
// not a solution. Verdicts are cached per (toolchain, source) because
// identical snippets recur heavily across samples.
inline bool validate_syntax(const std::string& source, CodeLanguage lang,
                            const SyntaxToolchain& toolchain = {}) {
    bool all_space = true;
    for (char c : source)
        if (!std::isspace(static_cast<unsigned char>(c))) {
            all_space = false;
            break;
        }
    if (all_space) return false;

    const std::vector<std::string>& argv =
        lang == CodeLanguage::python ? toolchain.python_argv : toolchain.cpp_argv;
    std::string key;
    for (const auto& a : argv) {
        key += a;
        key.push_back('\0');
    }
    key += source;

    static std::mutex cache_mutex;
    static std::unordered_map<std::string, bool> cache;
    {
        std::lock_guard<std::mutex> lock(cache_mutex);
        if (auto it = cache.find(key); it != cache.end()) return it->second;
    }

    TempDir scratch("forge-syntax");
    RunLimits limits;
    limits.wall_timeout_s = toolchain.timeout_s;
    limits.max_output_bytes = 1 << 20;
    const RunResult run = run_process(argv, scratch.path(), source, limits);
    if (run.spawn_failed)
        throw SandboxError("syntax checker '" + argv.front() + "' failed to start: " +
                           run.spawn_error);
    const bool valid = run.exited && run.exit_code == 0;

    std::lock_guard<std::mutex> lock(cache_mutex);
    cache.emplace(std::move(key), valid);
    return valid;
}

struct ParsedSolution {
    std::string reasoning_trace;
    std::string answer_text;  // everything after the reasoning span
    std::vector<CodeBlock> code_blocks;
    CodeLanguage code_language;  // the requested language
    std::string solution_source;  // last block of the requested language
    bool syntax_valid = false;
};

struct SolutionParse {
    std::optional<ParsedSolution> solution;  // engaged iff outcome.accepted
    FilterOutcome outcome;
};

inline SolutionParse parse_solution_response(const llm::RawResponse& raw, CodeLanguage wanted,
                                             const SyntaxToolchain& toolchain = {}) {
    if (raw.finish_reason == llm::FinishReason::length)
        return {std::nullopt, FilterOutcome::reject(RejectReason::truncated)};
    const auto split = extract_think(raw.text);
    if (!split) return {std::nullopt, FilterOutcome::reject(RejectReason::missing_think)};

    ParsedSolution parsed;
    parsed.reasoning_trace = split->reasoning_trace;
    parsed.answer_text = split->answer_text;
    parsed.code_blocks = extract_code_blocks(split->answer_text);
    parsed.code_language = wanted;

    const CodeBlock* final_block = nullptr;
    for (const auto& b : parsed.code_blocks)
        if (b.code_language == wanted) final_block = &b;
    if (final_block == nullptr)
        return {std::nullopt, FilterOutcome::reject(RejectReason::missing_code_block)};

    parsed.solution_source = final_block->source;
    parsed.syntax_valid = validate_syntax(parsed.solution_source, wanted, toolchain);
    if (!parsed.syntax_valid)
        return {std::nullopt, FilterOutcome::reject(RejectReason::syntax_invalid)};
    return {std::move(parsed), FilterOutcome::accept()};
}

enum class Judgment { right, wrong };

inline std::string to_string(Judgment j) {
    return j == Judgment::right ? "right" : "wrong";
}

inline Judgment judgment_from_string(const std::string& s) {
    if (s == "right") return Judgment::right;
    if (s == "wrong") return Judgment::wrong;
    throw ValidationError("unknown judgment: " + s);
}

struct Critique {
    std::string reasoning_trace;
    Judgment judgment = Judgment::wrong;
    std::uint64_t trace_length = 0;  // unicode scalar values in reasoning_trace
};

struct CritiqueParse {
    std::optional<Critique> critique;  // engaged iff outcome.accepted
    FilterOutcome outcome;
};

namespace detail {

inline std::vector<std::string> tag_spans(std::string_view text, std::string_view open,
                                          std::string_view close) {
    std::vector<std::string> spans;
    std::size_t pos = 0;
    while (true) {
        const std::size_t at = text.find(open, pos);
        if (at == std::string_view::npos) break;
        const std::size_t end = text.find(close, at + open.size());
        if (end == std::string_view::npos) break;
        spans.emplace_back(text.substr(at + open.size(), end - at - open.size()));
        pos = end + close.size();
    }
    return spans;
}

inline std::string trim_lower_ascii(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    std::string out;
    out.reserve(e - b);
    for (std::size_t i = b; i < e; ++i)
        out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(s[i]))));
    return out;
}

}  // namespace detail

// The verdict is checked before the reasoning span: a response whose verdict
// is absent or non-binary is rejected for that, whatever else is wrong with
// it. Exactly one <judgment> span is required; "Right " and "WRONG" count,
// anything else is non-binary.
inline CritiqueParse parse_critique_response(const llm::RawResponse& raw) {
    if (raw.finish_reason == llm::FinishReason::length)
        return {std::nullopt, FilterOutcome::reject(RejectReason::truncated)};

    const auto spans = detail::tag_spans(raw.text, "<judgment>", "</judgment>");
    if (spans.size() != 1)
        return {std::nullopt, FilterOutcome::reject(RejectReason::missing_judgment)};
    const std::string verdict = detail::trim_lower_ascii(spans.front());
    if (verdict != "right" && verdict != "wrong")
        return {std::nullopt, FilterOutcome::reject(RejectReason::non_binary_judgment)};

    const auto split = extract_think(raw.text);
    if (!split) return {std::nullopt, FilterOutcome::reject(RejectReason::missing_think)};

    Critique critique;
    critique.reasoning_trace = split->reasoning_trace;
    critique.judgment = verdict == "right" ? Judgment::right : Judgment::wrong;
    critique.trace_length = count_scalars(critique.reasoning_trace);
    return {std::move(critique), FilterOutcome::accept()};
}

// JSONL record shapes shared by the pipeline and the CLI.

inline json solution_record(const std::string& question_id, std::size_t sample_index,
                            const ParsedSolution& parsed) {
    return json{{"question_id", question_id},
                {"sample_index", sample_index},
                {"code_language", to_string(parsed.code_language)},
                {"reasoning_trace", parsed.reasoning_trace},
                {"solution_source", parsed.solution_source}};
}

inline json critique_record(const std::string& question_id, std::size_t sample_index,
                            const Critique& critique) {
    return json{{"question_id", question_id},
                {"sample_index", sample_index},
                {"judgment", to_string(critique.judgment)},
                {"critique_trace", critique.reasoning_trace},
                {"trace_length", critique.trace_length}};
}

inline json rejection_record(const std::string& question_id, std::size_t sample_index,
                             const std::string& stage, std::optional<CodeLanguage> lang,
                             RejectReason reason) {
    json j{{"question_id", question_id},
           {"sample_index", sample_index},
           {"stage", stage},
           {"reject_reason", to_string(reason)}};
    if (lang) j["code_language"] = to_string(*lang);
    return j;
}

}  // namespace forge::postproc
