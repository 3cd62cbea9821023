#pragma once

// Helpers shared across the test binaries: fixture locations, tiny factories,
// and scripted collaborators for the screening/judging protocol tests.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "reasonforge/corpus.hpp"
#include "reasonforge/decontam.hpp"
#include "reasonforge/types.hpp"

namespace testsupport {

inline std::filesystem::path fixture_dir() { return REASONFORGE_FIXTURE_DIR; }
inline std::filesystem::path asset_dir() { return REASONFORGE_ASSET_DIR; }

inline std::string fixture_path(const std::string& name) {
    return (fixture_dir() / name).string();
}

inline forge::json read_json_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + p.string());
    return forge::json::parse(in);
}

inline forge::Question mk_q(std::string id, std::string statement) {
    forge::Question q;
    q.id = std::move(id);
    q.statement = std::move(statement);
    return q;
}

// Statement perturbations that survive normalization-heavy comparison: case
// flips, whitespace padding, and occasional single-word tweaks.
inline std::string perturb_statement(const std::string& base, std::mt19937_64& rng) {
    std::string s = base;
    auto chance = [&](int pct) { return static_cast<int>(rng() % 100) < pct; };
    if (chance(60)) {
        for (char& c : s)
            if (c >= 'a' && c <= 'z' && chance(25)) c = static_cast<char>(c - 'a' + 'A');
    }
    if (chance(50)) {
        std::string out;
        for (char c : s) {
            out.push_back(c);
            if (c == ' ' && chance(30)) out.push_back(' ');
        }
        s = out;
    }
    if (chance(30)) s = "  " + s;
    if (chance(30)) s += "  ";
    if (chance(25) && s.size() > 3 && s.back() == '.') s.back() = '!';
    return s;
}

// Embedder with hand-assigned vectors per exact statement text; unknown
// statements map to a fixed default direction.
class ScriptedEmbedder final : public forge::corpus::EmbeddingProvider {
public:
    void set(const std::string& statement, std::vector<double> vec) {
        vectors_[statement] = std::move(vec);
    }
    std::vector<double> embed(const std::string& statement) override {
        auto it = vectors_.find(statement);
        if (it != vectors_.end()) return it->second;
        return {1.0, 0.0, 0.0, 0.0};
    }

private:
    std::map<std::string, std::vector<double>> vectors_;
};

// Judge that answers from an explicit pair list and counts every call.
class ScriptedJudge final : public forge::corpus::JudgeProvider {
public:
    void mark_equivalent(const std::string& a, const std::string& b) {
        pairs_.insert({a, b});
        pairs_.insert({b, a});
    }
    bool equivalent(const std::string& a, const std::string& b) override {
        ++calls_;
        return pairs_.count({a, b}) > 0;
    }
    int calls() const { return calls_; }

private:
    std::set<std::pair<std::string, std::string>> pairs_;
    int calls_ = 0;
};

// Judge that throws after a fixed number of successful answers.
class FailingJudge final : public forge::corpus::JudgeProvider {
public:
    explicit FailingJudge(int allowed) : allowed_(allowed) {}
    bool equivalent(const std::string&, const std::string&) override {
        if (calls_++ >= allowed_) throw forge::ProviderError("judge endpoint went away");
        return false;
    }

private:
    int allowed_;
    int calls_ = 0;
};

}  // namespace testsupport
