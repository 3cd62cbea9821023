#pragma once

#include <chrono>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "reasonforge/errors.hpp"
#include "reasonforge/types.hpp"
#include "reasonforge/util/parallel.hpp"

namespace forge::llm {

// Output budgets: 32k for solution generation, 24k for critique generation,
// 30,720 for benchmark inference.
constexpr int kSolutionMaxNewTokens = 32768;
constexpr int kCritiqueMaxNewTokens = 24576;
constexpr int kBenchmarkMaxNewTokens = 30720;

struct SamplingParams {
    double temperature = 0.6;
    double top_p = 0.95;
    int max_new_tokens = kSolutionMaxNewTokens;
    int n_samples = 1;
    std::optional<std::uint64_t> seed;  // honored by the mock provider only

    void validate() const {
        if (temperature < 0) throw ValidationError("temperature must be >= 0");
        if (!(top_p > 0 && top_p <= 1)) throw ValidationError("top_p must be in (0, 1]");
        if (max_new_tokens <= 0) throw ValidationError("max_new_tokens must be positive");
        if (n_samples <= 0) throw ValidationError("n_samples must be positive");
    }
};

enum class PromptName { solution_python, solution_cpp, critique };

inline std::string to_string(PromptName p) {
    switch (p) {
        case PromptName::solution_python: return "solution_python";
        case PromptName::solution_cpp: return "solution_cpp";
        case PromptName::critique: return "critique";
    }
    return "solution_python";
}

// The three prompt templates, embedded verbatim. The copies under
// assets/prompts/ hold the same bytes for external tooling; a test keeps
// them in sync.
inline constexpr std::string_view kSolutionPythonTemplate =
    R"RF(You are a helpful and harmless assistant. You should think step-by-step before responding to the instruction below.

Please use python programming language only.

You must use ```python for just the final solution code block with the following format:
```python
# Your code here
```

{input}
)RF";

inline constexpr std::string_view kSolutionCppTemplate =
    R"RF(You are a helpful and harmless assistant. You should think step-by-step before responding to the instruction below.

Please use c++ programming language only.

You must use ```cpp for just the final solution code block with the following format:
```cpp
# Your code here
```

{input}
)RF";

inline constexpr std::string_view kCritiqueTemplate =
    R"RF(You are a helpful and harmless assistant. You should think step-by-step before responding to the instruction below.

You have solved a programming problem. Now, you will critique your solution and conclude with <judgment>right/wrong</judgment>.

## Question
{question}

## Solution
{solution}
)RF";

// Template for the contamination judge. Not part of PromptName: it belongs to
// the decontamination protocol, not the generation/critique flow.
inline constexpr std::string_view kJudgeTemplate =
    R"RF(Decide whether the two programming problems below are the same task. Reply with exactly one word: equivalent if a correct solution to one is a correct solution to the other, otherwise distinct.

## Problem A
{a}

## Problem B
{b}
)RF";

inline std::string_view template_text(PromptName p) {
    switch (p) {
        case PromptName::solution_python: return kSolutionPythonTemplate;
        case PromptName::solution_cpp: return kSolutionCppTemplate;
        case PromptName::critique: return kCritiqueTemplate;
    }
    return kSolutionPythonTemplate;
}

inline std::string template_asset_path(PromptName p) {
    return std::string(REASONFORGE_ASSET_DIR) + "/prompts/" + to_string(p) + ".txt";
}

// Single left-to-right pass; substituted text is never rescanned, so
// placeholder-looking content inside values cannot leak through. Every
// placeholder in the template must have a value and every value must be
// consumed, otherwise rendering refuses to emit.
inline std::string fill_placeholders(std::string_view tmpl,
                                     const std::map<std::string, std::string>& values) {
    std::string out;
    out.reserve(tmpl.size() + 256);
    std::map<std::string, bool> used;
    for (const auto& [k, v] : values) used[k] = false;
    std::size_t i = 0;
    while (i < tmpl.size()) {
        if (tmpl[i] == '{') {
            const std::size_t close = tmpl.find('}', i + 1);
            if (close != std::string_view::npos) {
                const std::string key(tmpl.substr(i + 1, close - i - 1));
                auto it = values.find(key);
                if (it != values.end()) {
                    out += it->second;
                    used[key] = true;
                    i = close + 1;
                    continue;
                }
                throw ValidationError("prompt template placeholder {" + key + "} has no value");
            }
        }
        out.push_back(tmpl[i]);
        ++i;
    }
    for (const auto& [k, was_used] : used)
        if (!was_used)
            throw ValidationError("prompt template is missing placeholder {" + k + "}");
    return out;
}

inline std::string render_solution_prompt(const Question& question, CodeLanguage code_language) {
    if (question.statement.empty())
        throw ValidationError("render_solution_prompt: empty statement for question '" +
                              question.id + "'");
    const PromptName name = code_language == CodeLanguage::python ? PromptName::solution_python
                                                                  : PromptName::solution_cpp;
    return fill_placeholders(template_text(name), {{"input", question.statement}});
}

inline std::string render_critique_prompt(const Question& question,
                                          const std::string& solution_text) {
    if (question.statement.empty())
        throw ValidationError("render_critique_prompt: empty statement for question '" +
                              question.id + "'");
    if (solution_text.empty())
        throw ValidationError("render_critique_prompt: empty solution text");
    return fill_placeholders(template_text(PromptName::critique),
                             {{"question", question.statement}, {"solution", solution_text}});
}

inline std::string render_judge_prompt(const std::string& statement_a,
                                       const std::string& statement_b) {
    if (statement_a.empty() || statement_b.empty())
        throw ValidationError("render_judge_prompt: empty statement");
    return fill_placeholders(kJudgeTemplate, {{"a", statement_a}, {"b", statement_b}});
}

enum class FinishReason { stop, length, error };

inline std::string to_string(FinishReason f) {
    switch (f) {
        case FinishReason::stop: return "stop";
        case FinishReason::length: return "length";
        case FinishReason::error: return "error";
    }
    return "error";
}

inline FinishReason finish_reason_from_string(const std::string& s) {
    if (s == "stop") return FinishReason::stop;
    if (s == "length") return FinishReason::length;
    if (s == "error") return FinishReason::error;
    throw ValidationError("unknown finish_reason: " + s);
}

struct RawResponse {
    std::string text;
    FinishReason finish_reason = FinishReason::stop;
    std::map<std::string, std::string> provider_meta;
};

struct ProviderRequest {
    std::string model;
    std::string prompt;
    double temperature = 0.6;
    double top_p = 0.95;
    int max_tokens = kSolutionMaxNewTokens;
    std::uint64_t seed = 0;
    std::size_t sample_index = 0;
};

// Retryable failure (HTTP 5xx/429, connection error); anything else raised
// as ProviderError fails the request immediately.
struct ProviderTransientError : ProviderError {
    using ProviderError::ProviderError;
};

class CompletionProvider {
public:
    virtual ~CompletionProvider() = default;
    virtual std::string name() const = 0;
    virtual RawResponse complete(const ProviderRequest& request) = 0;
};

struct RetryPolicy {
    int max_retries = 3;
    double initial_delay_s = 0.5;
    double backoff_factor = 2.0;
    double max_delay_s = 8.0;
    double sleep_scale = 1.0;  // tests shrink this to keep retries instant
};

struct GenerateOptions {
    std::string model = "default";
    RetryPolicy retry;
    std::size_t jobs = 8;  // bounded in-flight request pool
};

// Returns exactly n_samples responses in sample-index order. Transient
// provider failures are retried with exponential backoff; exhausting the
// retry budget raises ProviderError carrying the last provider status.
inline std::vector<RawResponse> generate(const std::string& prompt, const SamplingParams& params,
                                         CompletionProvider& provider,
                                         const GenerateOptions& opts = {}) {
    params.validate();
    const std::size_t n = static_cast<std::size_t>(params.n_samples);
    return parallel_map_ordered<RawResponse>(n, opts.jobs, [&](std::size_t sample_index) {
        ProviderRequest req;
        req.model = opts.model;
        req.prompt = prompt;
        req.temperature = params.temperature;
        req.top_p = params.top_p;
        req.max_tokens = params.max_new_tokens;
        req.seed = params.seed.value_or(0);
        req.sample_index = sample_index;

        double delay = opts.retry.initial_delay_s;
        for (int attempt = 0;; ++attempt) {
            try {
                return provider.complete(req);
            } catch (const ProviderTransientError& e) {
                if (attempt >= opts.retry.max_retries)
                    throw ProviderError("provider '" + provider.name() + "' failed after " +
                                        std::to_string(attempt + 1) +
                                        " attempts; last status: " + e.what());
                std::this_thread::sleep_for(
                    std::chrono::duration<double>(delay * opts.retry.sleep_scale));
                delay = std::min(delay * opts.retry.backoff_factor, opts.retry.max_delay_s);
            }
        }
    });
}

}  // namespace forge::llm
