#include "tsc/llmclient.h"
#include "tsc/util.h"

#include <chrono>
#include <cmath>
#include <iostream>
#include <sstream>
#include <thread>

namespace tsc {

    void BackendConfig::validate() const {
        if (kind != "openai" && kind != "stub" && kind != "replay")
            throw ConfigError("backend kind must be openai, stub or replay, got " + kind);
        if (kind == "openai" && endpoint.empty())
            throw ConfigError("backend endpoint is required for kind openai");
        if (!(temperature >= 0.0))
            throw ConfigError("temperature must be >= 0");
        if (!(topP > 0.0 && topP <= 1.0))
            throw ConfigError("top_p must lie in (0, 1]");
        if (maxRetries < 0)
            throw ConfigError("max_retries must be >= 0");
        if (!(timeoutSeconds > 0.0))
            throw ConfigError("timeout must be positive");
        if (backoffSeconds < 0.0)
            throw ConfigError("backoff must be >= 0");
        if (maxInFlight < 1 || maxInFlight > 1024)
            throw ConfigError("max_in_flight must lie in [1, 1024]");
    }

    BackendConfig BackendConfig::fromJson(const Json &j) {
        if (!j.is_object())
            throw ConfigError("backend config must be a JSON object");
        BackendConfig c;
        try {
            c.kind = j.value("kind", c.kind);
            c.endpoint = j.value("endpoint", c.endpoint);
            c.model = j.value("model", c.model);
            c.temperature = j.value("temperature", c.temperature);
            c.topP = j.value("top_p", c.topP);
            c.timeoutSeconds = j.value("timeout", c.timeoutSeconds);
            c.maxRetries = j.value("max_retries", c.maxRetries);
            c.apiKeyEnvVar = j.value("api_key_env_var", c.apiKeyEnvVar);
            c.backoffSeconds = j.value("backoff", c.backoffSeconds);
            c.maxInFlight = j.value("max_in_flight", c.maxInFlight);
            if (j.contains("api_key"))
                throw ConfigError("API keys must be supplied via api_key_env_var, not in config files");
            if (j.contains("options"))
                c.options = j["options"];
        } catch (const nlohmann::json::exception &e) {
            throw ConfigError(std::string("backend config: ") + e.what());
        }
        c.validate();
        return c;
    }

    Json BackendConfig::toJson() const {
        return {{"kind", kind},
                {"endpoint", endpoint},
                {"model", model},
                {"temperature", temperature},
                {"top_p", topP},
                {"timeout", timeoutSeconds},
                {"max_retries", maxRetries},
                {"api_key_env_var", apiKeyEnvVar},
                {"backoff", backoffSeconds},
                {"max_in_flight", maxInFlight},
                {"options", options}};
    }

    LlmClient::LlmClient(BackendConfig config, std::shared_ptr<ChatBackend> backend)
        : config_(std::move(config)), backend_(std::move(backend)), inFlight_(1) {
        config_.validate();
        if (!backend_)
            throw ConfigError("LLM client needs a backend");
        // The semaphore starts at 1; release the remaining permits.
        if (config_.maxInFlight > 1)
            inFlight_.release(config_.maxInFlight - 1);
    }

    ChatRequest LlmClient::makeRequest(const PromptText &prompt) const {
        return {config_.model, {{"user", prompt.text}}, config_.temperature, config_.topP};
    }

    std::string LlmClient::complete(const PromptText &prompt) {
        const ChatRequest request = makeRequest(prompt);
        std::string lastError;
        for (int attempt = 0; attempt <= config_.maxRetries; attempt++) {
            if (attempt > 0) {
                double delay = config_.backoffSeconds * std::pow(2.0, attempt - 1);
                std::this_thread::sleep_for(std::chrono::duration<double>(delay));
            }
            inFlight_.acquire();
            auto start = std::chrono::steady_clock::now();
            try {
                ChatResponse response = backend_->send(request);
                inFlight_.release();
                double latency = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
                {
                    std::lock_guard lock(transcriptMutex_);
                    transcript_.push_back(
                        {request, response.content, latency, response.promptTokens, response.completionTokens});
                }
                return response.content;
            } catch (const TransientBackendError &e) {
                inFlight_.release();
                lastError = e.what();
            } catch (...) {
                inFlight_.release();
                throw;
            }
        }
        throw BackendError("backend failed after " + std::to_string(config_.maxRetries + 1) +
                           " attempts: " + lastError);
    }

    std::vector<std::string> LlmClient::sampleK(const PromptText &prompt, int k) {
        if (k < 1)
            throw ConfigError("sample count must be >= 1");
        if (k > 1 && config_.temperature <= 0.0)
            throw ConfigError("sampling several trajectories needs temperature > 0");
        std::vector<std::string> out;
        std::string lastError;
        for (int i = 0; i < k; i++) {
            try {
                out.push_back(complete(prompt));
            } catch (const AuthError &) {
                throw;
            } catch (const BackendError &e) {
                lastError = e.what();
            }
        }
        if (out.empty())
            throw BackendError("all " + std::to_string(k) + " samples failed: " + lastError);
        if (static_cast<int>(out.size()) < k)
            std::cerr << "warning: " << (k - static_cast<int>(out.size())) << " of " << k
                      << " samples failed for " << prompt.intersection << " at t=" << prompt.time << ": "
                      << lastError << '\n';
        return out;
    }

    std::vector<ChatExchange> LlmClient::transcript() const {
        std::lock_guard lock(transcriptMutex_);
        return transcript_;
    }

    void LlmClient::saveTranscript(const std::filesystem::path &path) const {
        std::ostringstream out;
        for (const auto &e : transcript())
            out << toJson(e).dump() << '\n';
        writeFile(path, out.str());
    }

    Json toJson(const ChatExchange &exchange) {
        Json j = {{"request", exchange.request.body()},
                  {"response", exchange.response},
                  {"latency_s", exchange.latencySeconds}};
        j["prompt_tokens"] = exchange.promptTokens ? Json(*exchange.promptTokens) : Json(nullptr);
        j["completion_tokens"] = exchange.completionTokens ? Json(*exchange.completionTokens) : Json(nullptr);
        return j;
    }

    ChatExchange exchangeFromJson(const Json &j) {
        const std::string where = "transcript";
        ChatExchange e;
        const Json &req = requireField(j, "request", where);
        e.request.model = requireAs<std::string>(req, "model", where);
        e.request.temperature = requireAs<double>(req, "temperature", where);
        e.request.topP = requireAs<double>(req, "top_p", where);
        for (const auto &m : requireField(req, "messages", where))
            e.request.messages.push_back(
                {requireAs<std::string>(m, "role", where), requireAs<std::string>(m, "content", where)});
        e.response = requireAs<std::string>(j, "response", where);
        e.latencySeconds = requireAs<double>(j, "latency_s", where);
        if (j.contains("prompt_tokens") && !j["prompt_tokens"].is_null())
            e.promptTokens = requireAs<int>(j, "prompt_tokens", where);
        if (j.contains("completion_tokens") && !j["completion_tokens"].is_null())
            e.completionTokens = requireAs<int>(j, "completion_tokens", where);
        return e;
    }

    std::vector<ChatExchange> loadTranscript(const std::filesystem::path &path) {
        std::vector<ChatExchange> out;
        std::size_t lineNo = 0;
        for (const auto &line : readLines(path)) {
            lineNo++;
            if (trim(line).empty())
                continue;
            try {
                out.push_back(exchangeFromJson(Json::parse(line)));
            } catch (const nlohmann::json::parse_error &) {
                throw ParseError(path.string() + " line " + std::to_string(lineNo) + ": malformed JSON");
            } catch (const ParseError &e) {
                throw ParseError(path.string() + " line " + std::to_string(lineNo) + ": " + e.what());
            }
        }
        return out;
    }

}
