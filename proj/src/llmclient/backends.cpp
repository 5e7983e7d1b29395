#include "tsc/llmclient.h"
#include "tsc/util.h"

#include "httplib.h"

#include <regex>

namespace tsc {

    Json ChatRequest::body() const {
        Json messagesJson = Json::array();
        for (const auto &m : messages)
            messagesJson.push_back({{"role", m.role}, {"content", m.content}});
        return {{"model", model}, {"messages", messagesJson}, {"temperature", temperature}, {"top_p", topP}};
    }

    const std::string &ChatRequest::userText() const {
        for (auto it = messages.rbegin(); it != messages.rend(); ++it)
            if (it->role == "user")
                return it->content;
        throw BackendError("chat request has no user message");
    }

    namespace {

        struct SplitUrl {
            std::string origin;  // scheme://host[:port]
            std::string path;    // without trailing slash
        };

        SplitUrl splitUrl(const std::string &url) {
            static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
            std::smatch m;
            if (!std::regex_match(url, m, re))
                throw ConfigError("backend endpoint must be an http(s) URL: " + url);
            std::string path = m[2].matched ? m[2].str() : "";
            while (!path.empty() && path.back() == '/')
                path.pop_back();
            return {m[1].str(), path};
        }

        ChatResponse parseCompletion(const std::string &body) {
            Json j;
            try {
                j = Json::parse(body);
            } catch (const nlohmann::json::parse_error &) {
                throw BackendError("backend returned malformed JSON");
            }
            try {
                ChatResponse r;
                r.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
                if (j.contains("usage") && j["usage"].is_object()) {
                    const auto &u = j["usage"];
                    if (u.contains("prompt_tokens"))
                        r.promptTokens = u["prompt_tokens"].get<int>();
                    if (u.contains("completion_tokens"))
                        r.completionTokens = u["completion_tokens"].get<int>();
                }
                return r;
            } catch (const nlohmann::json::exception &) {
                throw BackendError("backend response lacks choices[0].message.content");
            }
        }

    }

    HttpChatBackend::HttpChatBackend(std::string endpoint, std::string apiKey, double timeoutSeconds)
        : endpoint_(std::move(endpoint)), apiKey_(std::move(apiKey)), timeoutSeconds_(timeoutSeconds) {
        splitUrl(endpoint_);
    }

    ChatResponse HttpChatBackend::send(const ChatRequest &request) {
        auto url = splitUrl(endpoint_);
        httplib::Client client(url.origin);
        auto timeout = std::chrono::duration<double>(timeoutSeconds_);
        auto usec = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
        client.set_connection_timeout(usec);
        client.set_read_timeout(usec);
        client.set_write_timeout(usec);
        httplib::Headers headers;
        if (!apiKey_.empty())
            headers.emplace("Authorization", "Bearer " + apiKey_);
        auto res = client.Post(url.path + "/chat/completions", headers, request.body().dump(), "application/json");
        if (!res)
            throw TransientBackendError("transport failure: " + httplib::to_string(res.error()));
        if (res->status == 401 || res->status == 403)
            throw AuthError("backend rejected credentials (HTTP " + std::to_string(res->status) + ")");
        if (res->status >= 500)
            throw TransientBackendError("backend error HTTP " + std::to_string(res->status));
        if (res->status != 200)
            throw BackendError("backend answered HTTP " + std::to_string(res->status));
        return parseCompletion(res->body);
    }

    StubBackend::StubBackend(std::map<std::string, std::string> byPromptHash, std::vector<std::string> cycle,
                             std::optional<std::string> fallbackText)
        : byPromptHash_(std::move(byPromptHash)), cycle_(std::move(cycle)), default_(std::move(fallbackText)) {}

    std::shared_ptr<StubBackend> StubBackend::fromJson(const Json &options) {
        std::map<std::string, std::string> canned;
        std::vector<std::string> cycle;
        std::optional<std::string> fallbackText;
        try {
            if (options.contains("responses"))
                for (const auto &[hash, text] : options["responses"].items())
                    canned.emplace(hash, text.get<std::string>());
            if (options.contains("cycle"))
                cycle = options["cycle"].get<std::vector<std::string>>();
            if (options.contains("default"))
                fallbackText = options["default"].get<std::string>();
        } catch (const nlohmann::json::exception &e) {
            throw ConfigError(std::string("stub backend options: ") + e.what());
        }
        return std::make_shared<StubBackend>(std::move(canned), std::move(cycle), std::move(fallbackText));
    }

    ChatResponse StubBackend::send(const ChatRequest &request) {
        auto it = byPromptHash_.find(sha256Hex(request.userText()));
        if (it != byPromptHash_.end())
            return {it->second, {}, {}};
        std::lock_guard lock(mutex_);
        if (!cycle_.empty())
            return {cycle_[next_++ % cycle_.size()], {}, {}};
        if (default_)
            return {*default_, {}, {}};
        throw BackendError("stub backend has no response for this prompt");
    }

    ReplayBackend::ReplayBackend(const std::vector<ChatExchange> &transcript) {
        for (const auto &e : transcript)
            responses_[e.request.userText()].push_back(e.response);
    }

    bool ReplayBackend::has(const ChatRequest &request) const {
        std::lock_guard lock(mutex_);
        auto it = responses_.find(request.userText());
        return it != responses_.end() && !it->second.empty();
    }

    ChatResponse ReplayBackend::send(const ChatRequest &request) {
        std::lock_guard lock(mutex_);
        auto it = responses_.find(request.userText());
        if (it == responses_.end() || it->second.empty())
            throw BackendError("prompt not present in the replay transcript");
        std::string text = std::move(it->second.front());
        it->second.pop_front();
        return {std::move(text), {}, {}};
    }

    ChatResponse ResumeBackend::send(const ChatRequest &request) {
        if (primary_->has(request))
            return primary_->send(request);
        return secondary_->send(request);
    }

}
