#pragma once

#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace forge {

using json = nlohmann::json;

struct JsonlError : std::runtime_error {
    JsonlError(const std::string& path, std::size_t line, const std::string& what)
        : std::runtime_error(path + ":" + std::to_string(line) + ": " + what),
          line_number(line) {}
    std::size_t line_number;
};

// Calls fn(line_number, object) for every non-empty line. Line numbers are
// 1-based; parse failures carry them.
inline void for_each_jsonl(const std::string& path,
                           const std::function<void(std::size_t, const json&)>& fn) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw JsonlError(path, line_no, e.what());
        }
        fn(line_no, obj);
    }
}

inline std::vector<json> read_jsonl(const std::string& path) {
    std::vector<json> rows;
    for_each_jsonl(path, [&](std::size_t, const json& obj) { rows.push_back(obj); });
    return rows;
}

class JsonlWriter {
public:
    explicit JsonlWriter(const std::string& path) : out_(path, std::ios::binary | std::ios::trunc) {
        if (!out_) throw std::runtime_error("cannot write " + path);
    }

    void write(const json& obj) {
        out_ << obj.dump() << '\n';
        if (!out_) throw std::runtime_error("jsonl write failed");
    }

    void flush() { out_.flush(); }

private:
    std::ofstream out_;
};

inline void write_jsonl(const std::string& path, const std::vector<json>& rows) {
    JsonlWriter w(path);
    for (const auto& r : rows) w.write(r);
}

// Field accessors that name the offending field in the error.
inline const json& require_field(const json& obj, const std::string& key,
                                 const std::string& context) {
    auto it = obj.find(key);
    if (it == obj.end()) throw std::runtime_error(context + ": missing field '" + key + "'");
    return *it;
}

inline std::string require_string(const json& obj, const std::string& key,
                                  const std::string& context) {
    const json& v = require_field(obj, key, context);
    if (!v.is_string()) throw std::runtime_error(context + ": field '" + key + "' must be a string");
    return v.get<std::string>();
}

}  // namespace forge
