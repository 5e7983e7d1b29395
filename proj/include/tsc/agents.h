#pragma once

#include "tsc/controller.h"
#include "tsc/llmclient.h"
#include "tsc/prompting.h"
#include "tsc/reasoning_record.h"

#include <array>
#include <cstdint>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace tsc {

    inline const std::vector<PhaseId> kDefaultCycle = {PhaseId::ETWT, PhaseId::ELWL, PhaseId::NTST, PhaseId::NLSL};

    /// Per-phase upstream queue minus downstream queue.
    struct PressureTable {
        std::array<int, kPhaseCount> pressure{};
    };

    PressureTable pressureTable(const IntersectionObservation &obs);

    // First index attaining the maximum, i.e. ties go to ETWT < ELWL < NTST < NLSL.
    PhaseId argmaxPhase(const std::array<double, kPhaseCount> &scores);
    PhaseId argmaxPhase(const std::array<int, kPhaseCount> &scores);

    std::unique_ptr<Controller> makeRandomController(std::uint64_t seed);
    // Throws InvalidOrder unless `order` is a permutation of the four phases.
    std::unique_ptr<Controller> makeFixedTimeController(const std::vector<PhaseId> &order = kDefaultCycle);
    std::unique_ptr<Controller> makeMaxPressureController();
    // Longest total early queue.
    std::unique_ptr<Controller> makeGreedyStubController();

    std::array<int, kPhaseCount> queuedTotals(const IntersectionObservation &obs);
    PhaseId greedyChoice(const std::array<int, kPhaseCount> &queued);
    // Canned step-by-step analysis ending in <signal>PHASE</signal>.
    std::string greedyReasoning(const std::array<int, kPhaseCount> &queued);

    /// Offline chat backend answering rendered prompts with the greedy analysis.
    std::shared_ptr<ChatBackend> makeGreedyStubBackend();

    /// Builds the backend a config describes: openai (key from the named environment
    /// variable), stub (options.mode "greedy" or canned responses), or replay
    /// (options.transcript path).
    std::shared_ptr<ChatBackend> makeBackend(const BackendConfig &config);

    struct LlmControllerOptions {
        int samples = 1;
        // Rethrow backend failures instead of deferring to the fallback.
        bool strict = false;
    };

    /// Renders the observation, queries the client, parses the reply. Unparseable
    /// replies and exhausted retries defer to `fallback`. Every trajectory is recorded.
    class LlmController : public Controller {
    public:
        LlmController(std::shared_ptr<LlmClient> client, PromptSections sections,
                      std::unique_ptr<Controller> fallback, LlmControllerOptions options = {});

        PhaseId decide(const IntersectionObservation &obs, double t) override;
        std::string name() const override { return "llm"; }
        bool isDeterministic() const override { return false; }

        // Sorted by time, intersection and sample index.
        std::vector<ReasoningRecord> records() const;
        std::size_t fallbackCount() const;

    private:
        std::shared_ptr<LlmClient> client_;
        PromptSections sections_;
        std::unique_ptr<Controller> fallback_;
        LlmControllerOptions options_;
        mutable std::mutex mutex_;
        std::vector<ReasoningRecord> records_;
        std::size_t fallbacks_ = 0;
    };

}
