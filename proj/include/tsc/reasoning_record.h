#pragma once

#include "tsc/critic.h"
#include "tsc/json_io.h"
#include "tsc/prompting.h"

#include <filesystem>
#include <string>
#include <vector>

namespace tsc {

    /// One reasoning trajectory collected at a switching step.
    struct ReasoningRecord {
        double time = 0.0;
        std::string intersection;
        std::string prompt;
        std::string response;
        PhaseId action = PhaseId::ETWT;
        Features features{};
        std::string source;
        // Trajectories sampled from the same prompt share a group id; sample is the
        // index within the group.
        std::string group;
        int sample = 0;
        // True when the response did not parse and the fallback policy decided.
        bool fallback = false;
        bool operator==(const ReasoningRecord &) const = default;
    };

    Json toJson(const ReasoningRecord &record);
    ReasoningRecord recordFromJson(const Json &j);
    void saveRecords(const std::vector<ReasoningRecord> &records, const std::filesystem::path &path);
    // ParseError names the offending line.
    std::vector<ReasoningRecord> loadRecords(const std::filesystem::path &path);

    /// Keeps records whose action attains the critic's maximum (ties kept). Records decided
    /// by the fallback policy carry no parsed action and are dropped. Order preserved.
    std::vector<ReasoningRecord> filterTrajectories(const std::vector<ReasoningRecord> &records,
                                                    const CriticParams &params);

}
