#pragma once

#include "tsc/episode.h"
#include "tsc/json_io.h"

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace tsc {

    struct MetricsReport {
        std::string controller;
        double att = 0.0;
        double aql = 0.0;
        double awt = 0.0;
        // Mean wait per (vehicle, intersection) visit; reported alongside AWT.
        double awtPerVisit = 0.0;
        std::size_t finished = 0;
        std::size_t unfinished = 0;
        double episodeLength = 0.0;
    };

    /// Mean travel time; unfinished vehicles count until the end of the episode.
    /// Throws NoVehicles.
    double computeAtt(const EpisodeLog &log);
    /// Time average of the network-wide queued count; 0 for an empty log.
    double computeAql(const EpisodeLog &log);
    /// Mean accumulated wait per spawned vehicle. Throws NoVehicles.
    double computeAwt(const EpisodeLog &log);
    /// Mean wait per intersection visit; 0 when no visits were recorded.
    double computeAwtPerVisit(const EpisodeLog &log);

    MetricsReport computeReport(const EpisodeLog &log);

    Json toJson(const MetricsReport &report);
    MetricsReport reportFromJson(const Json &j);
    std::string formatTable(const std::vector<MetricsReport> &reports);
    // One row per run: model,att,aql,awt,awt_per_visit,finished,unfinished.
    std::string comparisonCsv(const std::vector<MetricsReport> &reports);

}
