#pragma once

#include <cstdlib>
#include <map>
#include <string>
#include <vector>

#include <httplib.h>

#include "reasonforge/errors.hpp"
#include "reasonforge/llm_client.hpp"
#include "reasonforge/util/jsonl.hpp"

namespace forge::llm {

// Wire profile for a completion endpoint. Field paths are dotted, with
// numeric segments indexing arrays ("choices.0.text" fits OpenAI-style
// servers; vLLM and friends use the same shape).
struct HttpProviderConfig {
    std::string base_url;  // scheme + host + port, e.g. http://127.0.0.1:8000
    std::string path = "/v1/completions";
    std::string model = "default";
    std::string text_path = "choices.0.text";
    std::string finish_reason_path = "choices.0.finish_reason";
    std::string api_key_env = "REASONFORGE_API_KEY";
    double timeout_s = 300.0;
    bool send_seed = false;  // some servers reject unknown fields
    std::map<std::string, std::string> extra_headers;

    static HttpProviderConfig from_json(const json& j) {
        HttpProviderConfig c;
        c.base_url = j.at("base_url").get<std::string>();
        if (j.contains("path")) c.path = j.at("path").get<std::string>();
        if (j.contains("model")) c.model = j.at("model").get<std::string>();
        if (j.contains("text_path")) c.text_path = j.at("text_path").get<std::string>();
        if (j.contains("finish_reason_path"))
            c.finish_reason_path = j.at("finish_reason_path").get<std::string>();
        if (j.contains("api_key_env")) c.api_key_env = j.at("api_key_env").get<std::string>();
        if (j.contains("timeout_s")) c.timeout_s = j.at("timeout_s").get<double>();
        if (j.contains("send_seed")) c.send_seed = j.at("send_seed").get<bool>();
        if (j.contains("extra_headers"))
            for (const auto& [k, v] : j.at("extra_headers").items())
                c.extra_headers[k] = v.get<std::string>();
        c.validate();
        return c;
    }

    void validate() const {
        if (base_url.empty()) throw ValidationError("http provider: base_url is required");
        if (base_url.rfind("https://", 0) == 0)
            throw ValidationError("http provider: TLS endpoints are not supported in this build; "
                                  "use a plain http endpoint or a local proxy");
        if (base_url.rfind("http://", 0) != 0)
            throw ValidationError("http provider: base_url must start with http://");
        if (path.empty() || path[0] != '/')
            throw ValidationError("http provider: path must start with /");
        if (timeout_s <= 0) throw ValidationError("http provider: timeout_s must be positive");
    }
};

namespace detail {

inline const json* walk_path(const json& root, const std::string& dotted) {
    const json* cur = &root;
    std::size_t pos = 0;
    while (pos <= dotted.size()) {
        const std::size_t dot = dotted.find('.', pos);
        const std::string seg =
            dotted.substr(pos, dot == std::string::npos ? std::string::npos : dot - pos);
        if (seg.empty()) return nullptr;
        if (cur->is_array()) {
            std::size_t idx = 0;
            try {
                idx = std::stoul(seg);
            } catch (...) {
                return nullptr;
            }
            if (idx >= cur->size()) return nullptr;
            cur = &(*cur)[idx];
        } else if (cur->is_object()) {
            auto it = cur->find(seg);
            if (it == cur->end()) return nullptr;
            cur = &*it;
        } else {
            return nullptr;
        }
        if (dot == std::string::npos) break;
        pos = dot + 1;
    }
    return cur;
}

}  // namespace detail

// Completion client over plain HTTP. Maps 429 and 5xx (and transport
// failures) to the transient error type so the retry loop in generate()
// takes over; other statuses fail the request outright. The bearer token, if
// any, is read from the configured environment variable at call time and
// never stored or logged.
class HttpProvider : public CompletionProvider {
public:
    explicit HttpProvider(HttpProviderConfig config) : config_(std::move(config)) {
        config_.validate();
    }

    std::string name() const override { return "http:" + config_.base_url; }

    RawResponse complete(const ProviderRequest& req) override {
        json payload = {
            {"model", config_.model.empty() ? req.model : config_.model},
            {"prompt", req.prompt},
            {"temperature", req.temperature},
            {"top_p", req.top_p},
            {"max_tokens", req.max_tokens},
            {"n", 1},
        };
        if (config_.send_seed)
            payload["seed"] = req.seed + static_cast<std::uint64_t>(req.sample_index);

        httplib::Client client(config_.base_url);
        const int timeout_whole = static_cast<int>(config_.timeout_s);
        const int timeout_frac_us =
            static_cast<int>((config_.timeout_s - timeout_whole) * 1e6);
        client.set_read_timeout(timeout_whole, timeout_frac_us);
        client.set_write_timeout(timeout_whole, timeout_frac_us);
        client.set_connection_timeout(10, 0);

        httplib::Headers headers;
        for (const auto& [k, v] : config_.extra_headers) headers.emplace(k, v);
        if (!config_.api_key_env.empty()) {
            if (const char* key = std::getenv(config_.api_key_env.c_str());
                key != nullptr && *key != '\0')
                headers.emplace("Authorization", std::string("Bearer ") + key);
        }

        auto res = client.Post(config_.path, headers, payload.dump(), "application/json");
        if (!res)
            throw ProviderTransientError("http provider: transport error contacting " +
                                         config_.base_url + ": " + httplib::to_string(res.error()));
        if (res->status == 429 || res->status >= 500)
            throw ProviderTransientError("http provider: status " + std::to_string(res->status));
        if (res->status != 200)
            throw ProviderError("http provider: status " + std::to_string(res->status) + ": " +
                                res->body.substr(0, 512));

        json body;
        try {
            body = json::parse(res->body);
        } catch (const json::parse_error& e) {
            throw ProviderError(std::string("http provider: response is not JSON: ") + e.what());
        }

        const json* text = detail::walk_path(body, config_.text_path);
        if (text == nullptr || !text->is_string())
            throw ProviderError("http provider: no string at response path '" +
                                config_.text_path + "'");
        RawResponse out;
        out.text = text->get<std::string>();
        out.finish_reason = FinishReason::stop;
        if (const json* fr = detail::walk_path(body, config_.finish_reason_path);
            fr != nullptr && fr->is_string() && fr->get<std::string>() == "length")
            out.finish_reason = FinishReason::length;
        out.provider_meta["status"] = std::to_string(res->status);
        return out;
    }

private:
    HttpProviderConfig config_;
};

}  // namespace forge::llm
