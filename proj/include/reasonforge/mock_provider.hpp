#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reasonforge/corpus.hpp"
#include "reasonforge/errors.hpp"
#include "reasonforge/llm_client.hpp"
#include "reasonforge/util/fs.hpp"
#include "reasonforge/util/hash.hpp"
#include "reasonforge/util/jsonl.hpp"

namespace forge::llm {

// One canned solution for the mock to emit, plus the verdict and trace length
// the mock's critic persona will attach when asked to review that code.
struct MockVariant {
    std::string code;
    std::string judgment = "right";  // "right" or "wrong"
    int critique_len = 200;          // unicode scalars in the critique reasoning trace
};

struct MockEntry {
    std::string match;  // substring of the question statement this entry serves
    std::vector<MockVariant> python;
    std::vector<MockVariant> cpp;
};

struct MockScript {
    // Every Nth response (keyed by hash, not call order) is deliberately
    // malformed so downstream filters have something to reject. 0 disables.
    int malformed_every = 0;
    std::vector<MockEntry> entries;

    static MockScript from_json(const json& j) {
        MockScript s;
        if (j.contains("malformed_every")) s.malformed_every = j.at("malformed_every").get<int>();
        if (s.malformed_every < 0)
            throw ValidationError("mock script: malformed_every must be >= 0");
        if (j.contains("entries")) {
            for (const auto& je : j.at("entries")) {
                MockEntry e;
                e.match = je.at("match").get<std::string>();
                auto read_variants = [](const json& arr) {
                    std::vector<MockVariant> out;
                    for (const auto& jv : arr) {
                        MockVariant v;
                        v.code = jv.at("code").get<std::string>();
                        if (jv.contains("judgment")) v.judgment = jv.at("judgment").get<std::string>();
                        if (v.judgment != "right" && v.judgment != "wrong")
                            throw ValidationError("mock script: judgment must be right or wrong, got '" +
                                                  v.judgment + "'");
                        if (jv.contains("critique_len")) v.critique_len = jv.at("critique_len").get<int>();
                        if (v.critique_len < 0)
                            throw ValidationError("mock script: critique_len must be >= 0");
                        out.push_back(std::move(v));
                    }
                    return out;
                };
                if (je.contains("python")) e.python = read_variants(je.at("python"));
                if (je.contains("cpp")) e.cpp = read_variants(je.at("cpp"));
                s.entries.push_back(std::move(e));
            }
        }
        return s;
    }

    static MockScript load_file(const std::filesystem::path& path) {
        json j;
        try {
            j = json::parse(read_file(path));
        } catch (const json::parse_error& e) {
            throw ValidationError("mock script " + path.string() + ": " + e.what());
        }
        return from_json(j);
    }
};

namespace detail {

// If `prompt` equals `tmpl` with {placeholder} replaced by some string,
// return that string.
inline std::optional<std::string> strip_frame(std::string_view prompt, std::string_view tmpl,
                                              std::string_view placeholder) {
    const std::size_t at = tmpl.find(placeholder);
    if (at == std::string_view::npos) return std::nullopt;
    const std::string_view prefix = tmpl.substr(0, at);
    const std::string_view suffix = tmpl.substr(at + placeholder.size());
    if (prompt.size() < prefix.size() + suffix.size()) return std::nullopt;
    if (prompt.substr(0, prefix.size()) != prefix) return std::nullopt;
    if (prompt.substr(prompt.size() - suffix.size()) != suffix) return std::nullopt;
    return std::string(prompt.substr(prefix.size(), prompt.size() - prefix.size() - suffix.size()));
}

// Deterministic ASCII filler of exactly `scalars` characters.
inline std::string filler_exact(std::uint64_t key, int scalars) {
    static constexpr std::string_view kWords[] = {
        "checking",  "the",       "loop",   "bounds",  "against", "the",     "constraints",
        "then",      "verifying", "edge",   "cases",   "for",     "empty",   "input",
        "and",       "overflow",  "before", "tracing", "the",     "sample",  "tests",
        "step",      "by",        "step",   "to",      "confirm", "the",     "output",
        "format",    "matches",   "the",    "problem", "statement", "exactly",
    };
    std::string out;
    out.reserve(static_cast<std::size_t>(scalars) + 16);
    std::uint64_t h = key;
    while (out.size() < static_cast<std::size_t>(scalars)) {
        h = mix64(h + 0x9e3779b97f4a7c15ULL);
        if (!out.empty()) out.push_back(' ');
        out += kWords[h % (sizeof(kWords) / sizeof(kWords[0]))];
    }
    out.resize(static_cast<std::size_t>(scalars));
    return out;
}

// Trim a byte prefix without splitting a UTF-8 sequence.
inline std::string safe_truncate(const std::string& s, std::size_t n) {
    if (n >= s.size()) return s;
    while (n > 0 && (static_cast<unsigned char>(s[n]) & 0xC0) == 0x80) --n;
    return s.substr(0, n);
}

}  // namespace detail

// Scripted offline provider. Responses are a pure function of
// (prompt bytes, seed, sample_index): reruns, process restarts, and thread
// interleavings all see identical text. Recognizes the four prompt shapes
// this library renders and refuses anything else, which catches template
// drift at the price of not being a general-purpose fake.
class MockProvider : public CompletionProvider {
public:
    MockProvider() = default;
    explicit MockProvider(MockScript script) : script_(std::move(script)) {}

    std::string name() const override { return "mock"; }

    RawResponse complete(const ProviderRequest& req) override {
        const std::uint64_t key = combine_hash(
            combine_hash(fnv1a64(req.prompt), mix64(req.seed)),
            static_cast<std::uint64_t>(req.sample_index));

        if (auto stmt = detail::strip_frame(req.prompt, kSolutionPythonTemplate, "{input}"))
            return solution_response(*stmt, CodeLanguage::python, key);
        if (auto stmt = detail::strip_frame(req.prompt, kSolutionCppTemplate, "{input}"))
            return solution_response(*stmt, CodeLanguage::cpp, key);
        if (auto pair = split_critique(req.prompt)) return critique_response(*pair, key);
        if (auto pair = split_judge(req.prompt)) return judge_response(*pair);
        throw ProviderError("mock provider: prompt does not match any known template");
    }

private:
    struct StatementAndBody {
        std::string statement;
        std::string body;
    };

    MockScript script_;

    std::optional<StatementAndBody> split_critique(std::string_view prompt) const {
        auto middle = detail::strip_frame(prompt, kCritiqueTemplate, "{question}\n\n## Solution\n{solution}");
        if (!middle) return std::nullopt;
        const std::size_t sep = middle->find("\n\n## Solution\n");
        if (sep == std::string::npos) return std::nullopt;
        return StatementAndBody{middle->substr(0, sep), middle->substr(sep + 14)};
    }

    std::optional<StatementAndBody> split_judge(std::string_view prompt) const {
        auto middle = detail::strip_frame(prompt, kJudgeTemplate, "{a}\n\n## Problem B\n{b}");
        if (!middle) return std::nullopt;
        const std::size_t sep = middle->find("\n\n## Problem B\n");
        if (sep == std::string::npos) return std::nullopt;
        return StatementAndBody{middle->substr(0, sep), middle->substr(sep + 15)};
    }

    const MockEntry* find_entry(const std::string& statement) const {
        for (const auto& e : script_.entries)
            if (!e.match.empty() && statement.find(e.match) != std::string::npos) return &e;
        return nullptr;
    }

    bool inject_malformed(std::uint64_t key) const {
        return script_.malformed_every > 0 &&
               mix64(key ^ 0x6d616c666f726dULL) %
                       static_cast<std::uint64_t>(script_.malformed_every) ==
                   0;
    }

    static std::string fence_open(CodeLanguage lang) {
        return lang == CodeLanguage::python ? "```python\n" : "```cpp\n";
    }

    static std::string broken_snippet(CodeLanguage lang) {
        return lang == CodeLanguage::python ? "def broken(:\n    return 0\n"
                                            : "int main( { return 0 }\n";
    }

    static std::string fallback_code(CodeLanguage lang, std::uint64_t key) {
        const std::string tag = std::to_string(key % 97);
        if (lang == CodeLanguage::python)
            return "import sys\n\ndef main():\n    data = sys.stdin.read().split()\n"
                   "    # variant " + tag + "\n    print(len(data))\n\nmain()\n";
        return "#include <iostream>\n#include <string>\n\nint main() {\n"
               "    std::string word;\n    long long n = 0;  // variant " + tag + "\n"
               "    while (std::cin >> word) ++n;\n    std::cout << n << \"\\n\";\n    return 0;\n}\n";
    }

    RawResponse solution_response(const std::string& statement, CodeLanguage lang,
                                  std::uint64_t key) const {
        const MockEntry* entry = find_entry(statement);
        const std::vector<MockVariant>* variants = nullptr;
        if (entry) variants = lang == CodeLanguage::python ? &entry->python : &entry->cpp;

        std::string code;
        if (variants && !variants->empty())
            code = (*variants)[key % variants->size()].code;
        else
            code = fallback_code(lang, key);

        const std::string think =
            "Let me work through the problem.\n" + detail::filler_exact(key, 160) + "\n";
        std::string body = "<think>" + think + "</think>\n\n";

        if (inject_malformed(key)) {
            switch (mix64(key ^ 0x6b696e64ULL) % 6) {
                case 0:  // no reasoning span at all
                    body = "Here is the solution.\n\n" + fence_open(lang) + code + "\n```\n";
                    break;
                case 1:  // reasoning span never closed
                    body = "<think>" + think + fence_open(lang) + code + "\n```\n";
                    break;
                case 2:  // fenced as the other language
                    body += fence_open(lang == CodeLanguage::python ? CodeLanguage::cpp
                                                                    : CodeLanguage::python) +
                            code + "\n```\n";
                    break;
                case 3:  // code does not parse
                    body += fence_open(lang) + broken_snippet(lang) + "```\n";
                    break;
                case 4: {  // cut off mid-generation
                    body += fence_open(lang) + code + "\n```\n";
                    RawResponse r;
                    r.text = detail::safe_truncate(body, body.size() * 3 / 5);
                    r.finish_reason = FinishReason::length;
                    return r;
                }
                case 5:  // prose only, no code block
                    body += "The approach above should work; sketching it suffices.\n";
                    break;
            }
            RawResponse r;
            r.text = std::move(body);
            return r;
        }

        // Occasionally lead with a scratch block so downstream extraction has
        // to pick the final one.
        if (mix64(key ^ 0x73637261ULL) % 4 == 0)
            body += "First a sketch:\n" + fence_open(lang) +
                    (lang == CodeLanguage::python ? "# sketch\npass\n" : "// sketch\nint sketch;\n") +
                    "```\n\nNow the full program:\n";
        body += fence_open(lang) + code + "\n```\n";
        RawResponse r;
        r.text = std::move(body);
        return r;
    }

    RawResponse critique_response(const StatementAndBody& parts, std::uint64_t key) const {
        std::string judgment;
        int want_len = -1;
        if (const MockEntry* entry = find_entry(parts.statement)) {
            for (const auto* variants : {&entry->python, &entry->cpp}) {
                for (const auto& v : *variants) {
                    if (!v.code.empty() && parts.body.find(v.code) != std::string::npos) {
                        judgment = v.judgment;
                        want_len = v.critique_len;
                        break;
                    }
                }
                if (!judgment.empty()) break;
            }
        }
        if (judgment.empty()) {
            judgment = mix64(key ^ 0x6a756467ULL) % 2 == 0 ? "right" : "wrong";
            want_len = 150 + static_cast<int>(mix64(key ^ 0x6c656eULL) % 400);
        }

        std::string body = "<think>" + detail::filler_exact(key, want_len) + "</think>\n\n";

        if (inject_malformed(key)) {
            switch (mix64(key ^ 0x6b696e64ULL) % 3) {
                case 0:  // verdict tag absent
                    body += "The reasoning holds up under the sample cases.\n";
                    break;
                case 1:  // verdict is not one of the two allowed words
                    body += "<judgment>partially correct</judgment>\n";
                    break;
                case 2: {  // cut off before the verdict
                    body += "The solution handles";
                    RawResponse r;
                    r.text = detail::safe_truncate(body, body.size() * 3 / 5);
                    r.finish_reason = FinishReason::length;
                    return r;
                }
            }
            RawResponse r;
            r.text = std::move(body);
            return r;
        }

        body += "The solution matches the required behavior on the cases I traced.\n"
                "<judgment>" + judgment + "</judgment>\n";
        RawResponse r;
        r.text = std::move(body);
        return r;
    }

    RawResponse judge_response(const StatementAndBody& parts) const {
        RawResponse r;
        r.text = corpus::normalize_statement(parts.statement) ==
                         corpus::normalize_statement(parts.body)
                     ? "equivalent"
                     : "distinct";
        return r;
    }
};

}  // namespace forge::llm
