#include "tsc/metrics.h"
#include "tsc/errors.h"

#include <algorithm>
#include <iomanip>
#include <sstream>

namespace tsc {

    double computeAtt(const EpisodeLog &log) {
        if (log.vehicles.empty())
            throw NoVehicles("no vehicles were spawned");
        double sum = 0.0;
        for (const auto &v : log.vehicles)
            sum += v.finishTime.value_or(log.episodeLength) - v.spawnTime;
        return sum / static_cast<double>(log.vehicles.size());
    }

    double computeAql(const EpisodeLog &log) {
        if (log.ticks.empty())
            return 0.0;
        double sum = 0.0;
        for (const auto &t : log.ticks)
            sum += t.queued;
        return sum / static_cast<double>(log.ticks.size());
    }

    double computeAwt(const EpisodeLog &log) {
        if (log.vehicles.empty())
            throw NoVehicles("no vehicles were spawned");
        double sum = 0.0;
        for (const auto &v : log.vehicles)
            sum += v.wait;
        return sum / static_cast<double>(log.vehicles.size());
    }

    double computeAwtPerVisit(const EpisodeLog &log) {
        double sum = 0.0;
        std::size_t visits = 0;
        for (const auto &v : log.vehicles)
            for (const auto &[inter, w] : v.intersectionWaits) {
                sum += w;
                visits++;
            }
        return visits == 0 ? 0.0 : sum / static_cast<double>(visits);
    }

    MetricsReport computeReport(const EpisodeLog &log) {
        MetricsReport r;
        r.controller = log.controller;
        r.att = computeAtt(log);
        r.aql = computeAql(log);
        r.awt = computeAwt(log);
        r.awtPerVisit = computeAwtPerVisit(log);
        r.finished = static_cast<std::size_t>(
            std::count_if(log.vehicles.begin(), log.vehicles.end(), [](const auto &v) { return v.finishTime.has_value(); }));
        r.unfinished = log.vehicles.size() - r.finished;
        r.episodeLength = log.episodeLength;
        return r;
    }

    Json toJson(const MetricsReport &r) {
        return {{"controller", r.controller},   {"att", r.att},
                {"aql", r.aql},                 {"awt", r.awt},
                {"awt_per_visit", r.awtPerVisit}, {"finished", r.finished},
                {"unfinished", r.unfinished},   {"episode_length", r.episodeLength}};
    }

    MetricsReport reportFromJson(const Json &j) {
        const std::string where = "metrics report";
        MetricsReport r;
        r.controller = requireAs<std::string>(j, "controller", where);
        r.att = requireAs<double>(j, "att", where);
        r.aql = requireAs<double>(j, "aql", where);
        r.awt = requireAs<double>(j, "awt", where);
        r.awtPerVisit = requireAs<double>(j, "awt_per_visit", where);
        r.finished = static_cast<std::size_t>(requireAs<int>(j, "finished", where));
        r.unfinished = static_cast<std::size_t>(requireAs<int>(j, "unfinished", where));
        r.episodeLength = requireAs<double>(j, "episode_length", where);
        return r;
    }

    std::string formatTable(const std::vector<MetricsReport> &reports) {
        std::size_t width = 10;
        for (const auto &r : reports)
            width = std::max(width, r.controller.size());
        std::ostringstream out;
        out << std::left << std::setw(static_cast<int>(width)) << "Controller" << std::right << std::setw(10)
            << "ATT" << std::setw(10) << "AQL" << std::setw(10) << "AWT" << std::setw(12) << "AWT/visit"
            << std::setw(10) << "Finished" << std::setw(12) << "Unfinished" << '\n';
        out << std::fixed << std::setprecision(2);
        for (const auto &r : reports)
            out << std::left << std::setw(static_cast<int>(width)) << r.controller << std::right << std::setw(10)
                << r.att << std::setw(10) << r.aql << std::setw(10) << r.awt << std::setw(12) << r.awtPerVisit
                << std::setw(10) << r.finished << std::setw(12) << r.unfinished << '\n';
        return out.str();
    }

    std::string comparisonCsv(const std::vector<MetricsReport> &reports) {
        std::ostringstream out;
        out << "model,att,aql,awt,awt_per_visit,finished,unfinished\n" << std::setprecision(10);
        for (const auto &r : reports)
            out << r.controller << ',' << r.att << ',' << r.aql << ',' << r.awt << ',' << r.awtPerVisit << ','
                << r.finished << ',' << r.unfinished << '\n';
        return out.str();
    }

}
