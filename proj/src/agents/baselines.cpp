#include "tsc/agents.h"
#include "tsc/errors.h"
#include "tsc/util.h"

#include <algorithm>
#include <map>
#include <random>
#include <sstream>

namespace tsc {

    namespace {

        template <typename T>
        PhaseId argmaxOf(const std::array<T, kPhaseCount> &scores) {
            int best = 0;
            for (int i = 1; i < kPhaseCount; i++)
                if (scores[i] > scores[best])
                    best = i;
            return kPhases[best];
        }

        class RandomController : public Controller {
        public:
            explicit RandomController(std::uint64_t seed) : seed_(seed) {}

            PhaseId decide(const IntersectionObservation &obs, double) override {
                std::lock_guard lock(mutex_);
                auto it = rngs_.find(obs.intersection);
                if (it == rngs_.end())
                    it = rngs_.emplace(obs.intersection, std::mt19937_64(seed_ ^ stableHash(obs.intersection))).first;
                std::uniform_int_distribution<int> pick(0, kPhaseCount - 1);
                return kPhases[pick(it->second)];
            }
            std::string name() const override { return "random"; }
            bool isDeterministic() const override { return false; }

        private:
            std::uint64_t seed_;
            std::mutex mutex_;
            std::map<std::string, std::mt19937_64> rngs_;
        };

        class FixedTimeController : public Controller {
        public:
            explicit FixedTimeController(std::vector<PhaseId> order) : order_(std::move(order)) {}

            PhaseId decide(const IntersectionObservation &obs, double) override {
                std::lock_guard lock(mutex_);
                std::size_t &k = counters_[obs.intersection];
                return order_[k++ % order_.size()];
            }
            std::string name() const override { return "fixedtime"; }
            bool isDeterministic() const override { return true; }

        private:
            std::vector<PhaseId> order_;
            std::mutex mutex_;
            std::map<std::string, std::size_t> counters_;
        };

        class MaxPressureController : public Controller {
        public:
            PhaseId decide(const IntersectionObservation &obs, double) override {
                return argmaxOf(pressureTable(obs).pressure);
            }
            std::string name() const override { return "maxpressure"; }
            bool isDeterministic() const override { return true; }
        };

        class GreedyStubController : public Controller {
        public:
            PhaseId decide(const IntersectionObservation &obs, double) override {
                return greedyChoice(queuedTotals(obs));
            }
            std::string name() const override { return "greedy"; }
            bool isDeterministic() const override { return true; }
        };

    }

    PressureTable pressureTable(const IntersectionObservation &obs) {
        PressureTable t;
        for (int i = 0; i < kPhaseCount; i++)
            t.pressure[i] = obs.phases[i].queuedTotal() - obs.phases[i].downstreamQueued;
        return t;
    }

    PhaseId argmaxPhase(const std::array<double, kPhaseCount> &scores) { return argmaxOf(scores); }
    PhaseId argmaxPhase(const std::array<int, kPhaseCount> &scores) { return argmaxOf(scores); }

    std::unique_ptr<Controller> makeRandomController(std::uint64_t seed) {
        return std::make_unique<RandomController>(seed);
    }

    std::unique_ptr<Controller> makeFixedTimeController(const std::vector<PhaseId> &order) {
        auto sorted = order;
        std::sort(sorted.begin(), sorted.end());
        if (sorted != std::vector<PhaseId>(kPhases.begin(), kPhases.end()))
            throw InvalidOrder("fixed-time order must list each of the four phases exactly once");
        return std::make_unique<FixedTimeController>(order);
    }

    std::unique_ptr<Controller> makeMaxPressureController() { return std::make_unique<MaxPressureController>(); }

    std::unique_ptr<Controller> makeGreedyStubController() { return std::make_unique<GreedyStubController>(); }

    std::array<int, kPhaseCount> queuedTotals(const IntersectionObservation &obs) {
        std::array<int, kPhaseCount> q{};
        for (int i = 0; i < kPhaseCount; i++)
            q[i] = obs.phases[i].queuedTotal();
        return q;
    }

    PhaseId greedyChoice(const std::array<int, kPhaseCount> &queued) { return argmaxOf(queued); }

    std::string greedyReasoning(const std::array<int, kPhaseCount> &queued) {
        PhaseId choice = greedyChoice(queued);
        std::ostringstream out;
        out << "Step 1: Early queued vehicles matter most, so compare the queues of each signal's allowed lanes.\n";
        for (int i = 0; i < kPhaseCount; i++)
            out << "- " << toString(kPhases[i]) << ": " << queued[i] << " early queued vehicles.\n";
        out << "Signal " << toString(choice) << " has the longest queue (" << queued[phaseIndex(choice)]
            << " vehicles), so releasing its lanes relieves the most congestion.\n";
        out << "Step 2: <signal>" << toString(choice) << "</signal>";
        return out.str();
    }

    std::shared_ptr<ChatBackend> makeGreedyStubBackend() {
        return std::make_shared<FunctionBackend>("stub-greedy", [](const ChatRequest &request) {
            auto queued = queuedTotalsFromPrompt(request.userText());
            if (!queued)
                throw BackendError("greedy stub could not read queue counts from the prompt");
            return greedyReasoning(*queued);
        });
    }

}
