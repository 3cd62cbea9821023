#pragma once

#include <cctype>
#include <string>

#include "reasonforge/decontam.hpp"
#include "reasonforge/errors.hpp"
#include "reasonforge/llm_client.hpp"

namespace forge::llm {

// Contamination judge backed by a completion endpoint: renders the pair
// prompt, asks for one greedy sample, and reads the first word of the answer
// (skipping any reasoning span a thinking model emits first).
class CompletionJudge : public corpus::JudgeProvider {
public:
    explicit CompletionJudge(CompletionProvider& provider, GenerateOptions opts = {})
        : provider_(provider), opts_(std::move(opts)) {}

    bool equivalent(const std::string& statement_a, const std::string& statement_b) override {
        SamplingParams params;
        params.temperature = 0.0;
        params.max_new_tokens = 64;
        params.n_samples = 1;
        params.seed = 0;
        const auto responses =
            generate(render_judge_prompt(statement_a, statement_b), params, provider_, opts_);
        const std::string word = first_word_after_think(responses.front().text);
        if (word == "equivalent") return true;
        if (word == "distinct") return false;
        throw ProviderError("judge answer unrecognized: expected equivalent or distinct, got '" +
                            word + "'");
    }

private:
    CompletionProvider& provider_;
    GenerateOptions opts_;

    static std::string first_word_after_think(const std::string& text) {
        std::size_t start = 0;
        const std::size_t close = text.rfind("</think>");
        if (close != std::string::npos) start = close + 8;
        while (start < text.size() && !std::isalpha(static_cast<unsigned char>(text[start])))
            ++start;
        std::string word;
        while (start < text.size() && std::isalpha(static_cast<unsigned char>(text[start])))
            word.push_back(static_cast<char>(
                std::tolower(static_cast<unsigned char>(text[start++]))));
        return word;
    }
};

}  // namespace forge::llm
