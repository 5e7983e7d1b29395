#pragma once

#include "tsc/errors.h"
#include "tsc/json_io.h"
#include "tsc/prompting.h"

#include <deque>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <string>
#include <vector>

namespace tsc {

    /// Transport failures and 5xx answers; the client retries these.
    class TransientBackendError : public BackendError {
    public:
        using BackendError::BackendError;
    };

    struct BackendConfig {
        std::string kind = "openai";  // openai | stub | replay
        std::string endpoint;         // e.g. http://localhost:8000/v1
        std::string model;
        double temperature = 0.0;
        double topP = 1.0;
        double timeoutSeconds = 60.0;
        int maxRetries = 3;
        // Name of the environment variable holding the API key. Keys never live in files.
        std::string apiKeyEnvVar;
        double backoffSeconds = 0.5;
        int maxInFlight = 20;
        // Extra settings for the stub and replay kinds.
        Json options = Json::object();

        // Throws ConfigError.
        void validate() const;
        static BackendConfig fromJson(const Json &j);
        Json toJson() const;
    };

    struct ChatMessage {
        std::string role;
        std::string content;
        bool operator==(const ChatMessage &) const = default;
    };

    struct ChatRequest {
        std::string model;
        std::vector<ChatMessage> messages;
        double temperature = 0.0;
        double topP = 1.0;

        // OpenAI chat-completions body: model, messages, temperature, top_p.
        Json body() const;
        const std::string &userText() const;
    };

    struct ChatResponse {
        std::string content;
        std::optional<int> promptTokens;
        std::optional<int> completionTokens;
    };

    class ChatBackend {
    public:
        virtual ~ChatBackend() = default;
        virtual ChatResponse send(const ChatRequest &request) = 0;
        virtual std::string name() const = 0;
    };

    /// POST {endpoint}/chat/completions. 401/403 raise AuthError; 5xx and transport
    /// failures raise TransientBackendError; other statuses raise BackendError.
    class HttpChatBackend : public ChatBackend {
    public:
        HttpChatBackend(std::string endpoint, std::string apiKey, double timeoutSeconds);
        ChatResponse send(const ChatRequest &request) override;
        std::string name() const override { return "openai:" + endpoint_; }

    private:
        std::string endpoint_;
        std::string apiKey_;
        double timeoutSeconds_;
    };

    /// Offline backend. Lookup order: canned map keyed by the SHA-256 of the prompt,
    /// then the round-robin cycle, then the default text.
    class StubBackend : public ChatBackend {
    public:
        StubBackend() = default;
        StubBackend(std::map<std::string, std::string> byPromptHash, std::vector<std::string> cycle,
                    std::optional<std::string> fallbackText = std::nullopt);
        static std::shared_ptr<StubBackend> fromJson(const Json &options);

        ChatResponse send(const ChatRequest &request) override;
        std::string name() const override { return "stub"; }

    private:
        std::map<std::string, std::string> byPromptHash_;
        std::vector<std::string> cycle_;
        std::optional<std::string> default_;
        std::size_t next_ = 0;
        std::mutex mutex_;
    };

    class FunctionBackend : public ChatBackend {
    public:
        using Responder = std::function<std::string(const ChatRequest &)>;
        FunctionBackend(std::string name, Responder responder)
            : name_(std::move(name)), responder_(std::move(responder)) {}
        ChatResponse send(const ChatRequest &request) override { return {responder_(request), {}, {}}; }
        std::string name() const override { return name_; }

    private:
        std::string name_;
        Responder responder_;
    };

    struct ChatExchange {
        ChatRequest request;
        std::string response;
        double latencySeconds = 0.0;
        std::optional<int> promptTokens;
        std::optional<int> completionTokens;
    };

    /// Answers from a recorded transcript, in recorded order per prompt. Unknown
    /// prompts raise BackendError (not retried).
    class ReplayBackend : public ChatBackend {
    public:
        explicit ReplayBackend(const std::vector<ChatExchange> &transcript);
        ChatResponse send(const ChatRequest &request) override;
        std::string name() const override { return "replay"; }
        bool has(const ChatRequest &request) const;

    private:
        std::map<std::string, std::deque<std::string>> responses_;
        mutable std::mutex mutex_;
    };

    /// Serves from `primary` while it knows the prompt, otherwise from `secondary`.
    /// Used to resume an interrupted collection from its transcript.
    class ResumeBackend : public ChatBackend {
    public:
        ResumeBackend(std::shared_ptr<ReplayBackend> primary, std::shared_ptr<ChatBackend> secondary)
            : primary_(std::move(primary)), secondary_(std::move(secondary)) {}
        ChatResponse send(const ChatRequest &request) override;
        std::string name() const override { return secondary_->name(); }

    private:
        std::shared_ptr<ReplayBackend> primary_;
        std::shared_ptr<ChatBackend> secondary_;
    };

    class LlmClient {
    public:
        LlmClient(BackendConfig config, std::shared_ptr<ChatBackend> backend);

        /// Single user message; retries transient failures with exponential backoff.
        /// Throws AuthError immediately, BackendError after the retry budget.
        std::string complete(const PromptText &prompt);
        /// k completions of the same prompt, in order. Partial failure returns the
        /// successes with a warning; total failure throws BackendError.
        std::vector<std::string> sampleK(const PromptText &prompt, int k);

        const BackendConfig &config() const { return config_; }
        std::string backendName() const { return backend_->name(); }
        std::vector<ChatExchange> transcript() const;
        void saveTranscript(const std::filesystem::path &path) const;

    private:
        ChatRequest makeRequest(const PromptText &prompt) const;

        BackendConfig config_;
        std::shared_ptr<ChatBackend> backend_;
        std::counting_semaphore<1024> inFlight_;
        mutable std::mutex transcriptMutex_;
        std::vector<ChatExchange> transcript_;
    };

    Json toJson(const ChatExchange &exchange);
    ChatExchange exchangeFromJson(const Json &j);
    std::vector<ChatExchange> loadTranscript(const std::filesystem::path &path);

}
