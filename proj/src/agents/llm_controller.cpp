#include "tsc/agents.h"
#include "tsc/errors.h"

#include <algorithm>
#include <cstdlib>
#include <iostream>

namespace tsc {

    std::shared_ptr<ChatBackend> makeBackend(const BackendConfig &config) {
        config.validate();
        if (config.kind == "openai") {
            std::string key;
            if (!config.apiKeyEnvVar.empty()) {
                const char *value = std::getenv(config.apiKeyEnvVar.c_str());
                if (!value)
                    throw ConfigError("environment variable " + config.apiKeyEnvVar + " is not set");
                key = value;
            }
            return std::make_shared<HttpChatBackend>(config.endpoint, key, config.timeoutSeconds);
        }
        if (config.kind == "stub") {
            if (config.options.value("mode", std::string()) == "greedy")
                return makeGreedyStubBackend();
            return StubBackend::fromJson(config.options);
        }
        // replay
        if (!config.options.contains("transcript") || !config.options["transcript"].is_string())
            throw ConfigError("replay backend needs options.transcript");
        return std::make_shared<ReplayBackend>(loadTranscript(config.options["transcript"].get<std::string>()));
    }

    LlmController::LlmController(std::shared_ptr<LlmClient> client, PromptSections sections,
                                 std::unique_ptr<Controller> fallback, LlmControllerOptions options)
        : client_(std::move(client)), sections_(std::move(sections)), fallback_(std::move(fallback)),
          options_(options) {
        if (!client_ || !fallback_)
            throw ConfigError("LLM controller needs a client and a fallback controller");
        if (options_.samples < 1)
            throw ConfigError("sample count must be >= 1");
    }

    PhaseId LlmController::decide(const IntersectionObservation &obs, double t) {
        PromptText prompt = renderPrompt(obs, sections_);
        const Features features = featurize(obs);
        std::vector<std::string> responses;
        std::string failure;
        try {
            if (options_.samples == 1)
                responses.push_back(client_->complete(prompt));
            else
                responses = client_->sampleK(prompt, options_.samples);
        } catch (const BackendError &e) {
            if (options_.strict)
                throw;
            failure = e.what();
        }

        std::optional<PhaseId> chosen;
        std::vector<ReasoningRecord> batch;
        const std::string group = options_.samples > 1 ? obs.intersection + "@" + std::to_string(t) : "";
        for (std::size_t i = 0; i < responses.size(); i++) {
            auto parsed = parseDecision(responses[i]);
            ReasoningRecord r;
            r.time = t;
            r.intersection = obs.intersection;
            r.prompt = prompt.text;
            r.response = responses[i];
            r.features = features;
            r.source = client_->backendName();
            r.group = group;
            r.sample = static_cast<int>(i);
            if (parsed.status == ParseStatus::Ok) {
                r.action = *parsed.phase;
                if (!chosen)
                    chosen = parsed.phase;
            } else {
                r.fallback = true;
            }
            batch.push_back(std::move(r));
        }

        bool usedFallback = !chosen;
        if (usedFallback) {
            chosen = fallback_->decide(obs, t);
            if (!failure.empty())
                std::cerr << "llm: backend failure at " << obs.intersection << " t=" << t << " (" << failure
                          << "); using fallback " << toString(*chosen) << '\n';
            else
                std::cerr << "llm: unparseable response at " << obs.intersection << " t=" << t
                          << "; using fallback " << toString(*chosen) << ". Raw response: "
                          << (responses.empty() ? std::string() : responses.front()) << '\n';
            for (auto &r : batch)
                r.action = *chosen;
        }

        std::lock_guard lock(mutex_);
        if (usedFallback)
            fallbacks_++;
        for (auto &r : batch)
            records_.push_back(std::move(r));
        return *chosen;
    }

    std::vector<ReasoningRecord> LlmController::records() const {
        std::lock_guard lock(mutex_);
        auto out = records_;
        std::stable_sort(out.begin(), out.end(), [](const ReasoningRecord &a, const ReasoningRecord &b) {
            if (a.time != b.time)
                return a.time < b.time;
            if (a.intersection != b.intersection)
                return a.intersection < b.intersection;
            return a.sample < b.sample;
        });
        return out;
    }

    std::size_t LlmController::fallbackCount() const {
        std::lock_guard lock(mutex_);
        return fallbacks_;
    }

}
