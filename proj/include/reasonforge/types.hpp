#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "reasonforge/errors.hpp"
#include "reasonforge/util/jsonl.hpp"

namespace forge {

enum class Source {
    aizu, atcoder, codechef, codeforces, codewars, geeksforgeeks,
    hackerearth, hackerrank, kattis, leetcode, other,
};

enum class Difficulty { easy, medium, hard, unknown };

enum class IoMode { stdin_stdout, function_call };

enum class CodeLanguage { python, cpp };

inline std::string to_string(Source s) {
    switch (s) {
        case Source::aizu: return "aizu";
        case Source::atcoder: return "atcoder";
        case Source::codechef: return "codechef";
        case Source::codeforces: return "codeforces";
        case Source::codewars: return "codewars";
        case Source::geeksforgeeks: return "geeksforgeeks";
        case Source::hackerearth: return "hackerearth";
        case Source::hackerrank: return "hackerrank";
        case Source::kattis: return "kattis";
        case Source::leetcode: return "leetcode";
        case Source::other: return "other";
    }
    return "other";
}

inline Source source_from_string(const std::string& s) {
    static const std::map<std::string, Source> table = {
        {"aizu", Source::aizu},       {"atcoder", Source::atcoder},
        {"codechef", Source::codechef}, {"codeforces", Source::codeforces},
        {"codewars", Source::codewars}, {"geeksforgeeks", Source::geeksforgeeks},
        {"hackerearth", Source::hackerearth}, {"hackerrank", Source::hackerrank},
        {"kattis", Source::kattis},   {"leetcode", Source::leetcode},
        {"other", Source::other}};
    auto it = table.find(s);
    if (it == table.end()) throw ValidationError("unknown source platform: " + s);
    return it->second;
}

inline std::string to_string(Difficulty d) {
    switch (d) {
        case Difficulty::easy: return "easy";
        case Difficulty::medium: return "medium";
        case Difficulty::hard: return "hard";
        case Difficulty::unknown: return "unknown";
    }
    return "unknown";
}

inline Difficulty difficulty_from_string(const std::string& s) {
    if (s == "easy") return Difficulty::easy;
    if (s == "medium") return Difficulty::medium;
    if (s == "hard") return Difficulty::hard;
    if (s == "unknown" || s.empty()) return Difficulty::unknown;
    throw ValidationError("unknown difficulty: " + s);
}

inline std::string to_string(IoMode m) {
    return m == IoMode::stdin_stdout ? "stdin_stdout" : "function_call";
}

inline IoMode io_mode_from_string(const std::string& s) {
    if (s == "stdin_stdout") return IoMode::stdin_stdout;
    if (s == "function_call") return IoMode::function_call;
    throw ValidationError("unknown io_mode: " + s);
}

inline std::string to_string(CodeLanguage l) {
    return l == CodeLanguage::python ? "python" : "cpp";
}

inline CodeLanguage language_from_string(const std::string& s) {
    if (s == "python") return CodeLanguage::python;
    if (s == "cpp") return CodeLanguage::cpp;
    throw ValidationError("unknown code language: " + s);
}

struct TestCase {
    // stdin bytes in stdin_stdout mode; a JSON argument array in
    // function_call mode.
    std::string input;
    std::string expected_output;
};

// Starter code per language; function_call questions must provide the
// scaffold for whichever language is being evaluated.
using StarterCode = std::map<std::string, std::string>;

struct Question {
    std::string id;
    Source source = Source::other;
    std::string statement;
    Difficulty difficulty = Difficulty::unknown;
    std::vector<TestCase> tests;
    IoMode io_mode = IoMode::stdin_stdout;
    StarterCode starter_code;
    std::optional<int> date_tag;  // YYMM

    const std::string* starter_for(CodeLanguage lang) const {
        auto it = starter_code.find(to_string(lang));
        return it == starter_code.end() ? nullptr : &it->second;
    }
};

inline json test_case_to_json(const TestCase& t) {
    return json{{"input", t.input}, {"expected_output", t.expected_output}};
}

inline TestCase test_case_from_json(const json& j, const std::string& ctx) {
    TestCase t;
    t.input = require_string(j, "input", ctx);
    t.expected_output = require_string(j, "expected_output", ctx);
    return t;
}

inline json question_to_json(const Question& q) {
    json j{{"id", q.id},
           {"source", to_string(q.source)},
           {"statement", q.statement},
           {"difficulty", to_string(q.difficulty)},
           {"io_mode", to_string(q.io_mode)}};
    json tests = json::array();
    for (const auto& t : q.tests) tests.push_back(test_case_to_json(t));
    j["tests"] = std::move(tests);
    if (!q.starter_code.empty()) j["starter_code"] = q.starter_code;
    if (q.date_tag) j["date_tag"] = *q.date_tag;
    return j;
}

inline StarterCode starter_code_from_json(const json& v, const std::string& ctx) {
    StarterCode sc;
    if (v.is_string()) {
        // bare string accepted as a python scaffold for convenience
        sc["python"] = v.get<std::string>();
    } else if (v.is_object()) {
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (it.key() != "python" && it.key() != "cpp")
                throw ValidationError(ctx + ": starter_code key must be python or cpp, got '" +
                                      it.key() + "'");
            if (!it.value().is_string())
                throw ValidationError(ctx + ": starter_code." + it.key() + " must be a string");
            sc[it.key()] = it.value().get<std::string>();
        }
    } else {
        throw ValidationError(ctx + ": starter_code must be a string or an object");
    }
    return sc;
}

inline Question question_from_json(const json& j, const std::string& ctx) {
    Question q;
    q.id = require_string(j, "id", ctx);
    q.source = source_from_string(require_string(j, "source", ctx));
    q.statement = require_string(j, "statement", ctx);
    if (j.contains("difficulty"))
        q.difficulty = difficulty_from_string(j.at("difficulty").get<std::string>());
    q.io_mode = io_mode_from_string(require_string(j, "io_mode", ctx));
    if (j.contains("tests")) {
        const json& tests = j.at("tests");
        if (!tests.is_array()) throw ValidationError(ctx + ": tests must be an array");
        for (const auto& t : tests) q.tests.push_back(test_case_from_json(t, ctx));
    }
    if (j.contains("starter_code"))
        q.starter_code = starter_code_from_json(j.at("starter_code"), ctx);
    if (j.contains("date_tag")) {
        if (!j.at("date_tag").is_number_integer())
            throw ValidationError(ctx + ": date_tag must be an integer");
        q.date_tag = j.at("date_tag").get<int>();
    }
    if (q.io_mode == IoMode::function_call && q.starter_code.empty())
        throw ValidationError(ctx + ": function_call question '" + q.id +
                              "' requires starter_code");
    return q;
}

inline std::vector<Question> load_questions(const std::string& path) {
    std::vector<Question> out;
    for_each_jsonl(path, [&](std::size_t line, const json& obj) {
        out.push_back(question_from_json(obj, path + ":" + std::to_string(line)));
    });
    return out;
}

inline void save_questions(const std::string& path, const std::vector<Question>& qs) {
    JsonlWriter w(path);
    for (const auto& q : qs) w.write(question_to_json(q));
}

}  // namespace forge
