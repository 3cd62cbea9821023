#pragma once

#include <stdexcept>
#include <string>

namespace forge {

// Exit-code mapping used by the CLI: validation 2, provider 3, sandbox 4.
struct ValidationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProviderError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SandboxError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// A question with fewer than 5 unit tests; excluded from the verified subsample.
struct NotEnoughTests : std::runtime_error {
    explicit NotEnoughTests(const std::string& question_id, std::size_t n)
        : std::runtime_error("question " + question_id + " has " + std::to_string(n) +
                             " tests, need at least 5"),
          question_id(question_id) {}
    std::string question_id;
};

}  // namespace forge
