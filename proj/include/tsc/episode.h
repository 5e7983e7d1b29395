#pragma once

#include "tsc/controller.h"
#include "tsc/observe.h"
#include "tsc/simcore.h"

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tsc {

    struct TickRecord {
        double time = 0.0;  // start of the tick
        int queued = 0;     // after movement
        int deferred = 0;
        bool operator==(const TickRecord &) const = default;
    };

    struct VehicleRecord {
        std::string id;
        double spawnTime = 0.0;
        std::optional<double> finishTime;
        double wait = 0.0;
        // Waiting time split by the intersection each lane leads to.
        std::vector<std::pair<std::string, double>> intersectionWaits;
        bool operator==(const VehicleRecord &) const = default;
    };

    struct SwitchRecord {
        double time = 0.0;
        std::string intersection;
        IntersectionObservation observation;
        PhaseId phase = PhaseId::ETWT;
        bool operator==(const SwitchRecord &) const = default;
    };

    struct EpisodeLog {
        std::string controller;
        double episodeLength = 0.0;
        std::vector<TickRecord> ticks;
        std::vector<VehicleRecord> vehicles;  // every spawned vehicle, including deferred
        std::vector<SwitchRecord> switches;
        std::size_t deferralEvents = 0;
        bool operator==(const EpisodeLog &) const = default;
    };

    struct EpisodeOptions {
        // Query controllers of intersections due at the same tick concurrently. Actions
        // are still applied in intersection order.
        bool parallelDecisions = false;
        // Called after every tick with the new state.
        std::function<void(const SimState &)> onTick;
    };

    /// Runs `config.episodeLength` seconds. Controller exceptions abort the episode and
    /// propagate after a diagnostic naming the intersection and time.
    EpisodeLog runEpisode(std::shared_ptr<const RoadNetwork> network, const FlowSpec &flow,
                          Controller &controller, const SimConfig &config,
                          const EpisodeOptions &options = {});

    /// Switch decisions whose green stage ends within the episode, as (intersection, time)
    /// pairs in log order. A decision repeating the active phase skips the clearance
    /// interval; any other decision pays yellow plus all-red first.
    std::vector<std::pair<std::string, double>> completedDecisions(const EpisodeLog &log, const SimConfig &config);

    // Line-delimited JSON; see docs/formats.md.
    std::string serializeEpisodeLog(const EpisodeLog &log);
    EpisodeLog parseEpisodeLog(std::string_view text);
    void saveEpisodeLog(const EpisodeLog &log, const std::filesystem::path &path);
    EpisodeLog loadEpisodeLog(const std::filesystem::path &path);
    std::string episodeLogHash(const EpisodeLog &log);

}
