#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "reasonforge/errors.hpp"
#include "reasonforge/exec.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/jsonl.hpp"

namespace forge::bench {

enum class Venue { atcoder, leetcode };

inline std::string to_string(Venue v) { return v == Venue::atcoder ? "atcoder" : "leetcode"; }

inline Venue venue_from_string(const std::string& s) {
    if (s == "atcoder") return Venue::atcoder;
    if (s == "leetcode") return Venue::leetcode;
    throw ValidationError("unknown venue: " + s);
}

struct BenchmarkRecord {
    std::string problem_id;
    Venue venue = Venue::atcoder;
    int date_tag = 0;  // YYMM
    Difficulty difficulty = Difficulty::easy;
    std::string statement;
    IoMode io_mode = IoMode::stdin_stdout;
    StarterCode starter_code;
    std::vector<TestCase> tests;
};

inline json record_to_json(const BenchmarkRecord& r) {
    json tests = json::array();
    for (const auto& t : r.tests) tests.push_back(test_case_to_json(t));
    json j{{"problem_id", r.problem_id},
           {"venue", to_string(r.venue)},
           {"date_tag", r.date_tag},
           {"difficulty", to_string(r.difficulty)},
           {"statement", r.statement},
           {"io_mode", to_string(r.io_mode)},
           {"tests", std::move(tests)}};
    if (!r.starter_code.empty()) j["starter_code"] = r.starter_code;
    return j;
}

inline BenchmarkRecord record_from_json(const json& j, const std::string& ctx) {
    BenchmarkRecord r;
    r.problem_id = require_string(j, "problem_id", ctx);
    r.venue = venue_from_string(require_string(j, "venue", ctx));
    if (!j.contains("date_tag") || !j.at("date_tag").is_number_integer())
        throw ValidationError(ctx + ": date_tag must be an integer (YYMM)");
    r.date_tag = j.at("date_tag").get<int>();
    const int month = r.date_tag % 100;
    if (r.date_tag < 0 || month < 1 || month > 12)
        throw ValidationError(ctx + ": date_tag " + std::to_string(r.date_tag) +
                              " is not a YYMM value");
    r.difficulty = difficulty_from_string(require_string(j, "difficulty", ctx));
    if (r.difficulty == Difficulty::unknown)
        throw ValidationError(ctx + ": difficulty must be easy, medium, or hard");
    r.statement = require_string(j, "statement", ctx);
    r.io_mode = io_mode_from_string(require_string(j, "io_mode", ctx));
    if (j.contains("starter_code"))
        r.starter_code = starter_code_from_json(j.at("starter_code"), ctx);
    if (!j.contains("tests") || !j.at("tests").is_array())
        throw ValidationError(ctx + ": tests must be an array");
    for (const auto& t : j.at("tests")) r.tests.push_back(test_case_from_json(t, ctx));

    // Venue pins the evaluation mode.
    if (r.venue == Venue::leetcode) {
        if (r.io_mode != IoMode::function_call)
            throw ValidationError(ctx + ": leetcode record '" + r.problem_id +
                                  "' must use function_call io_mode");
        if (r.starter_code.empty())
            throw ValidationError(ctx + ": leetcode record '" + r.problem_id +
                                  "' is missing starter_code");
    } else if (r.io_mode != IoMode::stdin_stdout) {
        throw ValidationError(ctx + ": atcoder record '" + r.problem_id +
                              "' must use stdin_stdout io_mode");
    }
    return r;
}

struct LoadReport {
    std::vector<BenchmarkRecord> records;
    std::vector<std::string> errors;  // populated only in lenient mode
};

// Strict mode (default) throws on the first schema violation with the file
// and line; lenient mode skips bad lines and reports them.
inline LoadReport load_benchmark(const std::filesystem::path& path, bool lenient = false) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open benchmark file " + path.string());
    LoadReport report;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        bool blank = true;
        for (char ch : line)
            if (!std::isspace(static_cast<unsigned char>(ch))) {
                blank = false;
                break;
            }
        if (blank) continue;
        const std::string ctx = path.string() + ":" + std::to_string(line_no);
        try {
            json j = json::parse(line);
            report.records.push_back(record_from_json(j, ctx));
        } catch (const std::exception& e) {
            std::string msg = e.what();
            if (msg.find(ctx) == std::string::npos) msg = ctx + ": " + msg;
            if (!lenient) throw ValidationError(msg);
            report.errors.push_back(msg);
        }
    }
    return report;
}

// Inclusive on both ends, plain integer comparison on YYMM tags.
inline std::vector<BenchmarkRecord> filter_by_date(const std::vector<BenchmarkRecord>& records,
                                                   int from_tag, int to_tag) {
    if (from_tag > to_tag)
        throw ValidationError("filter_by_date: from_tag " + std::to_string(from_tag) +
                              " exceeds to_tag " + std::to_string(to_tag));
    std::vector<BenchmarkRecord> out;
    for (const auto& r : records)
        if (r.date_tag >= from_tag && r.date_tag <= to_tag) out.push_back(r);
    return out;
}

inline Question to_question(const BenchmarkRecord& r) {
    Question q;
    q.id = r.problem_id;
    q.source = r.venue == Venue::atcoder ? Source::atcoder : Source::leetcode;
    q.statement = r.statement;
    q.difficulty = r.difficulty;
    q.tests = r.tests;
    q.io_mode = r.io_mode;
    q.starter_code = r.starter_code;
    q.date_tag = r.date_tag;
    return q;
}

// ---- starter-code signature parsing ----

struct CppSignature {
    std::string return_type;
    std::string method;
    std::vector<std::string> param_types;
};

namespace detail {

inline bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
}

// Canonical spelling: no std::, no const/&, single spaces, none around <>.
inline std::string normalize_type(std::string_view raw) {
    std::string t;
    std::size_t i = 0;
    while (i < raw.size()) {
        if (raw.compare(i, 5, "std::") == 0) {
            i += 5;
            continue;
        }
        if (raw[i] == '&' || raw[i] == '*') {
            ++i;
            continue;
        }
        if (raw.compare(i, 5, "const") == 0 &&
            (i + 5 == raw.size() || !ident_char(raw[i + 5])) &&
            (i == 0 || !ident_char(raw[i - 1]))) {
            i += 5;
            continue;
        }
        t.push_back(raw[i]);
        ++i;
    }
    // collapse whitespace, drop it around angle brackets
    std::string out;
    for (char c : t) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty() && out.back() != ' ' && out.back() != '<') out.push_back(' ');
        } else {
            if ((c == '<' || c == '>' || c == ',') && !out.empty() && out.back() == ' ')
                out.pop_back();
            out.push_back(c);
        }
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    std::size_t b = 0;
    while (b < out.size() && out[b] == ' ') ++b;
    return out.substr(b);
}

inline std::vector<std::string> split_params(std::string_view params) {
    std::vector<std::string> out;
    int depth = 0;
    std::string cur;
    for (char c : params) {
        if (c == '<') ++depth;
        if (c == '>') --depth;
        if (c == ',' && depth == 0) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    bool blank = true;
    for (char c : cur)
        if (!std::isspace(static_cast<unsigned char>(c))) blank = false;
    if (!blank) out.push_back(cur);
    return out;
}

// "vector<int>& nums" -> type without the trailing parameter name.
inline std::string strip_param_name(std::string_view param) {
    std::size_t end = param.size();
    while (end > 0 && std::isspace(static_cast<unsigned char>(param[end - 1]))) --end;
    std::size_t name_begin = end;
    while (name_begin > 0 && ident_char(param[name_begin - 1])) --name_begin;
    // No separate name (e.g. unnamed parameter "int"): keep everything.
    std::string_view head = param.substr(0, name_begin);
    bool head_has_ident = false;
    for (char c : head)
        if (ident_char(c) || c == '>' || c == '&' || c == '*') head_has_ident = true;
    if (!head_has_ident) return normalize_type(param.substr(0, end));
    return normalize_type(head);
}

}  // namespace detail

// Method name of the scaffold's entry point: the first def in the class that
// is not a dunder.
inline std::optional<std::string> parse_python_starter(const std::string& starter) {
    std::size_t pos = 0;
    while (true) {
        pos = starter.find("def ", pos);
        if (pos == std::string::npos) return std::nullopt;
        std::size_t name_begin = pos + 4;
        while (name_begin < starter.size() && starter[name_begin] == ' ') ++name_begin;
        std::size_t name_end = name_begin;
        while (name_end < starter.size() && detail::ident_char(starter[name_end])) ++name_end;
        std::string name = starter.substr(name_begin, name_end - name_begin);
        pos = name_end;
        if (name.empty() || name[0] == '_') continue;
        return name;
    }
}

// First public method of the scaffold's Solution class, with normalized
// parameter and return types.
inline std::optional<CppSignature> parse_cpp_starter(const std::string& starter) {
    std::size_t search_from = 0;
    if (const std::size_t pub = starter.find("public:"); pub != std::string::npos)
        search_from = pub + 7;
    const std::size_t open = starter.find('(', search_from);
    if (open == std::string::npos) return std::nullopt;
    const std::size_t close = starter.find(')', open);
    if (close == std::string::npos) return std::nullopt;

    std::size_t name_end = open;
    while (name_end > search_from &&
           std::isspace(static_cast<unsigned char>(starter[name_end - 1])))
        --name_end;
    std::size_t name_begin = name_end;
    while (name_begin > search_from && detail::ident_char(starter[name_begin - 1])) --name_begin;
    if (name_begin == name_end) return std::nullopt;

    CppSignature sig;
    sig.method = starter.substr(name_begin, name_end - name_begin);
    sig.return_type = detail::normalize_type(
        std::string_view(starter).substr(search_from, name_begin - search_from));
    for (const auto& p :
         detail::split_params(std::string_view(starter).substr(open + 1, close - open - 1)))
        sig.param_types.push_back(detail::strip_param_name(p));
    if (sig.method.empty() || sig.return_type.empty()) return std::nullopt;
    return sig;
}

// ---- harness synthesis ----

struct HarnessSource {
    CodeLanguage language = CodeLanguage::python;
    std::string source;
    bool valid = false;
    std::string invalid_reason;
};

namespace detail {

// Reader expression for one normalized C++ type, or empty if unsupported.
inline std::string cpp_reader_expr(const std::string& type) {
    static const std::map<std::string, std::string> table = {
        {"int", "forge_driver::rd_int(c)"},
        {"long long", "forge_driver::rd_ll(c)"},
        {"double", "forge_driver::rd_double(c)"},
        {"bool", "forge_driver::rd_bool(c)"},
        {"string", "forge_driver::rd_string(c)"},
        {"vector<int>", "forge_driver::rd_vec(c, forge_driver::rd_int)"},
        {"vector<long long>", "forge_driver::rd_vec(c, forge_driver::rd_ll)"},
        {"vector<double>", "forge_driver::rd_vec(c, forge_driver::rd_double)"},
        {"vector<string>", "forge_driver::rd_vec(c, forge_driver::rd_string)"},
        {"vector<vector<int>>",
         "forge_driver::rd_vec(c, [](forge_driver::Cur& c2) { return "
         "forge_driver::rd_vec(c2, forge_driver::rd_int); })"},
    };
    auto it = table.find(type);
    return it == table.end() ? std::string() : it->second;
}

inline bool cpp_writable_type(const std::string& type) {
    return !cpp_reader_expr(type).empty();  // readers and writers cover the same set
}

// Shared by every generated C++ harness: a minimal JSON reader/writer for the
// supported scalar and vector types. Output formatting mirrors python's
// json.dumps with compact separators so both languages grade identically.
inline constexpr std::string_view kCppDriverPrelude = R"RF(
namespace forge_driver {

struct Cur {
    const std::string& s;
    std::size_t i;
};

inline void ws(Cur& c) {
    while (c.i < c.s.size() && std::isspace(static_cast<unsigned char>(c.s[c.i]))) ++c.i;
}

inline void fail_input(const char* what) {
    std::fprintf(stderr, "harness: malformed test input: %s\n", what);
    std::exit(3);
}

inline void expect(Cur& c, char ch) {
    ws(c);
    if (c.i >= c.s.size() || c.s[c.i] != ch) fail_input("unexpected byte");
    ++c.i;
}

inline bool peek(Cur& c, char ch) {
    ws(c);
    return c.i < c.s.size() && c.s[c.i] == ch;
}

inline long long rd_ll(Cur& c) {
    ws(c);
    errno = 0;
    char* end = nullptr;
    long long v = std::strtoll(c.s.c_str() + c.i, &end, 10);
    if (end == c.s.c_str() + c.i) fail_input("expected integer");
    c.i = static_cast<std::size_t>(end - c.s.c_str());
    return v;
}

inline int rd_int(Cur& c) { return static_cast<int>(rd_ll(c)); }

inline double rd_double(Cur& c) {
    ws(c);
    char* end = nullptr;
    double v = std::strtod(c.s.c_str() + c.i, &end);
    if (end == c.s.c_str() + c.i) fail_input("expected number");
    c.i = static_cast<std::size_t>(end - c.s.c_str());
    return v;
}

inline bool rd_bool(Cur& c) {
    ws(c);
    if (c.s.compare(c.i, 4, "true") == 0) {
        c.i += 4;
        return true;
    }
    if (c.s.compare(c.i, 5, "false") == 0) {
        c.i += 5;
        return false;
    }
    fail_input("expected boolean");
    return false;
}

inline void utf8_append(std::string& out, unsigned cp) {
    if (cp < 0x80) {
        out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
        out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
        out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
        out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
        out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
}

inline unsigned rd_hex4(Cur& c) {
    unsigned v = 0;
    for (int k = 0; k < 4; ++k) {
        if (c.i >= c.s.size()) fail_input("truncated \\u escape");
        char ch = c.s[c.i++];
        v <<= 4;
        if (ch >= '0' && ch <= '9') v |= static_cast<unsigned>(ch - '0');
        else if (ch >= 'a' && ch <= 'f') v |= static_cast<unsigned>(ch - 'a' + 10);
        else if (ch >= 'A' && ch <= 'F') v |= static_cast<unsigned>(ch - 'A' + 10);
        else fail_input("bad \\u escape");
    }
    return v;
}

inline std::string rd_string(Cur& c) {
    expect(c, '"');
    std::string out;
    while (true) {
        if (c.i >= c.s.size()) fail_input("unterminated string");
        char ch = c.s[c.i++];
        if (ch == '"') break;
        if (ch != '\\') {
            out.push_back(ch);
            continue;
        }
        if (c.i >= c.s.size()) fail_input("dangling escape");
        char esc = c.s[c.i++];
        switch (esc) {
            case '"': out.push_back('"'); break;
            case '\\': out.push_back('\\'); break;
            case '/': out.push_back('/'); break;
            case 'b': out.push_back('\b'); break;
            case 'f': out.push_back('\f'); break;
            case 'n': out.push_back('\n'); break;
            case 'r': out.push_back('\r'); break;
            case 't': out.push_back('\t'); break;
            case 'u': {
                unsigned cp = rd_hex4(c);
                if (cp >= 0xD800 && cp <= 0xDBFF && c.i + 1 < c.s.size() &&
                    c.s[c.i] == '\\' && c.s[c.i + 1] == 'u') {
                    c.i += 2;
                    unsigned lo = rd_hex4(c);
                    if (lo >= 0xDC00 && lo <= 0xDFFF)
                        cp = 0x10000 + ((cp - 0xD800) << 10) + (lo - 0xDC00);
                    else
                        cp = 0xFFFD;
                }
                utf8_append(out, cp);
                break;
            }
            default: fail_input("unknown escape");
        }
    }
    return out;
}

template <class F>
auto rd_vec(Cur& c, F f) {
    expect(c, '[');
    std::vector<decltype(f(c))> v;
    if (peek(c, ']')) {
        ++c.i;
        return v;
    }
    while (true) {
        v.push_back(f(c));
        if (peek(c, ',')) {
            ++c.i;
            continue;
        }
        expect(c, ']');
        break;
    }
    return v;
}

inline void wr(int v, std::string& o) { o += std::to_string(v); }
inline void wr(long long v, std::string& o) { o += std::to_string(v); }
inline void wr(bool v, std::string& o) { o += v ? "true" : "false"; }

inline void wr(double v, std::string& o) {
    char buf[64];
    if (std::isfinite(v) && v == std::floor(v) && std::fabs(v) < 1e15) {
        std::snprintf(buf, sizeof buf, "%.1f", v);
        o += buf;
        return;
    }
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) break;
    }
    o += buf;
}

inline void wr(const std::string& s, std::string& o) {
    o.push_back('"');
    for (char ch : s) {
        switch (ch) {
            case '"': o += "\\\""; break;
            case '\\': o += "\\\\"; break;
            case '\n': o += "\\n"; break;
            case '\r': o += "\\r"; break;
            case '\t': o += "\\t"; break;
            case '\b': o += "\\b"; break;
            case '\f': o += "\\f"; break;
            default:
                if (static_cast<unsigned char>(ch) < 0x20) {
                    char buf[8];
                    std::snprintf(buf, sizeof buf, "\\u%04x", ch);
                    o += buf;
                } else {
                    o.push_back(ch);
                }
        }
    }
    o.push_back('"');
}

template <class T>
void wr(const std::vector<T>& v, std::string& o) {
    o.push_back('[');
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i > 0) o.push_back(',');
        wr(v[i], o);
    }
    o.push_back(']');
}

}  // namespace forge_driver
)RF";

inline std::string cpp_stub_program(const std::string& reason) {
    std::string escaped;
    for (char c : reason) {
        if (c == '"' || c == '\\') escaped.push_back('\\');
        escaped.push_back(c == '\n' ? ' ' : c);
    }
    return "#include <cstdio>\n\nint main() {\n    std::fprintf(stderr, \"invalid harness: " +
           escaped + "\\n\");\n    return 1;\n}\n";
}

inline std::string python_stub_program(const std::string& reason) {
    std::string escaped;
    for (char c : reason) {
        if (c == '"' || c == '\\') escaped.push_back('\\');
        escaped.push_back(c == '\n' ? ' ' : c);
    }
    return "import sys\n\nsys.stderr.write(\"invalid harness: " + escaped +
           "\\n\")\nsys.exit(1)\n";
}

}  // namespace detail

// Wraps a starter-code completion into a standalone program: prelude, then
// the candidate's code, then a driver that reads one JSON argument array from
// stdin, invokes the scaffold's entry point, and prints the JSON-encoded
// return value. A solution missing the entry point (or using an unsupported
// type) yields a still-compilable stub that exits nonzero, so downstream
// grading records runtime_error rather than aborting.
inline HarnessSource build_harness_from_starter(const std::string& starter,
                                                const std::string& solution_source,
                                                CodeLanguage language) {
    HarnessSource h;
    h.language = language;
    auto invalid = [&](const std::string& reason) {
        h.valid = false;
        h.invalid_reason = reason;
        h.source = language == CodeLanguage::python ? detail::python_stub_program(reason)
                                                    : detail::cpp_stub_program(reason);
        return h;
    };

    if (language == CodeLanguage::python) {
        const auto method = parse_python_starter(starter);
        if (!method) return invalid("starter code defines no entry point");
        if (solution_source.find("class Solution") == std::string::npos)
            return invalid("solution does not define class Solution");
        if (solution_source.find("def " + *method) == std::string::npos)
            return invalid("solution does not define " + *method);
        h.valid = true;
        h.source = "import json\nimport sys\nfrom typing import *\n\n" + solution_source +
                   "\n\ndef _forge_main():\n"
                   "    args = json.loads(sys.stdin.read())\n"
                   "    result = Solution()." + *method + "(*args)\n"
                   "    print(json.dumps(result, separators=(\",\", \":\")))\n\n"
                   "_forge_main()\n";
        return h;
    }

    const auto sig = parse_cpp_starter(starter);
    if (!sig) return invalid("starter code defines no entry point");
    if (solution_source.find("class Solution") == std::string::npos)
        return invalid("solution does not define class Solution");
    if (solution_source.find(sig->method) == std::string::npos)
        return invalid("solution does not define " + sig->method);
    if (detail::cpp_reader_expr(sig->return_type).empty())
        return invalid("unsupported return type: " + sig->return_type);
    for (const auto& t : sig->param_types)
        if (detail::cpp_reader_expr(t).empty()) return invalid("unsupported parameter type: " + t);

    std::string src = "#include <bits/stdc++.h>\nusing namespace std;\n\n" + solution_source +
                      "\n" + std::string(detail::kCppDriverPrelude) + "\nint main() {\n" +
                      "    std::string forge_in((std::istreambuf_iterator<char>(std::cin)),\n"
                      "                         std::istreambuf_iterator<char>());\n"
                      "    forge_driver::Cur c{forge_in, 0};\n"
                      "    forge_driver::expect(c, '[');\n";
    for (std::size_t i = 0; i < sig->param_types.size(); ++i) {
        if (i > 0) src += "    forge_driver::expect(c, ',');\n";
        src += "    auto a" + std::to_string(i) + " = " +
               detail::cpp_reader_expr(sig->param_types[i]) + ";\n";
    }
    src += "    forge_driver::expect(c, ']');\n    Solution forge_sol;\n    auto forge_res = forge_sol." +
           sig->method + "(";
    for (std::size_t i = 0; i < sig->param_types.size(); ++i) {
        if (i > 0) src += ", ";
        src += "a" + std::to_string(i);
    }
    src += ");\n    std::string forge_out;\n    forge_driver::wr(forge_res, forge_out);\n"
           "    std::cout << forge_out << \"\\n\";\n    return 0;\n}\n";
    h.valid = true;
    h.source = std::move(src);
    return h;
}

inline HarnessSource build_harness(const BenchmarkRecord& record,
                                   const std::string& solution_source, CodeLanguage language) {
    if (record.io_mode != IoMode::function_call)
        throw ValidationError("build_harness: record '" + record.problem_id +
                              "' is not a starter-code problem");
    auto it = record.starter_code.find(to_string(language));
    if (it == record.starter_code.end()) {
        HarnessSource h;
        h.language = language;
        h.valid = false;
        h.invalid_reason = "no starter code for " + to_string(language);
        h.source = language == CodeLanguage::python
                       ? detail::python_stub_program(h.invalid_reason)
                       : detail::cpp_stub_program(h.invalid_reason);
        return h;
    }
    return build_harness_from_starter(it->second, solution_source, language);
}

// Adapter for the execution layer: starter-code questions are wrapped with
// the synthesized driver, everything else runs as-is.
inline exec::HarnessSynthesizer harness_synthesizer() {
    return [](const Question& q, const std::string& solution_source, CodeLanguage lang) {
        const std::string* starter = q.starter_for(lang);
        if (starter == nullptr) {
            const std::string reason = "no starter code for " + to_string(lang);
            return lang == CodeLanguage::python ? detail::python_stub_program(reason)
                                                : detail::cpp_stub_program(reason);
        }
        return build_harness_from_starter(*starter, solution_source, lang).source;
    };
}

}  // namespace forge::bench
