#include "tsc/episode.h"

#include <future>
#include <iostream>
#include <map>

namespace tsc {

    namespace {

        PhaseId decideOrReport(Controller &controller, const IntersectionObservation &obs, double t) {
            try {
                return controller.decide(obs, t);
            } catch (const std::exception &e) {
                std::cerr << "episode aborted: controller " << controller.name() << " failed at "
                          << obs.intersection << ", t=" << t << ": " << e.what() << std::endl;
                throw;
            }
        }

    }

    EpisodeLog runEpisode(std::shared_ptr<const RoadNetwork> network, const FlowSpec &flow,
                          Controller &controller, const SimConfig &config, const EpisodeOptions &options) {
        config.validate();
        SimState state = initialState(std::move(network), flow);
        const RoadNetwork &net = *state.network;
        EpisodeLog log;
        log.controller = controller.name();
        log.episodeLength = config.episodeLength;
        const int ticks = config.ticksFor(config.episodeLength);
        log.ticks.reserve(ticks);

        std::vector<int> due;
        for (int k = 0; k < ticks; k++) {
            due.clear();
            for (std::size_t i = 0; i < net.intersections().size(); i++)
                if (isSwitchTime(state, static_cast<int>(i)))
                    due.push_back(static_cast<int>(i));

            std::vector<IntersectionObservation> obs;
            obs.reserve(due.size());
            for (int i : due)
                obs.push_back(observe(state, config, i));

            std::vector<PhaseId> actions(due.size());
            if (options.parallelDecisions && due.size() > 1) {
                std::vector<std::future<PhaseId>> pending;
                pending.reserve(due.size());
                for (std::size_t j = 0; j < due.size(); j++)
                    pending.push_back(std::async(std::launch::async, [&, j] {
                        return decideOrReport(controller, obs[j], state.time);
                    }));
                for (std::size_t j = 0; j < due.size(); j++)
                    actions[j] = pending[j].get();
            } else {
                for (std::size_t j = 0; j < due.size(); j++)
                    actions[j] = decideOrReport(controller, obs[j], state.time);
            }

            for (std::size_t j = 0; j < due.size(); j++) {
                log.switches.push_back({state.time, obs[j].intersection, std::move(obs[j]), actions[j]});
                applyActionInPlace(state, config, due[j], actions[j]);
            }

            double t = state.time;
            advance(state, config);
            log.ticks.push_back({t, queuedVehicles(state, config), static_cast<int>(state.deferredCount())});
            if (options.onTick)
                options.onTick(state);
        }

        for (const auto &v : state.vehicles) {
            if (v.status == VehicleStatus::Pending)
                continue;
            VehicleRecord rec;
            rec.id = v.id;
            rec.spawnTime = v.spawnTime;
            rec.finishTime = v.finishTime;
            rec.wait = v.accumulatedWait;
            for (const auto &visit : v.visits)
                rec.intersectionWaits.emplace_back(net.intersections()[visit.intersection].id, visit.wait);
            log.vehicles.push_back(std::move(rec));
        }
        log.deferralEvents = state.deferralEvents;
        return log;
    }

    std::vector<std::pair<std::string, double>> completedDecisions(const EpisodeLog &log, const SimConfig &config) {
        std::map<std::string, std::optional<PhaseId>> active;
        std::vector<std::pair<std::string, double>> out;
        const double eps = 1e-9;
        for (const auto &s : log.switches) {
            auto &prev = active[s.intersection];
            double duration = config.greenDuration;
            if (prev != s.phase)
                duration += config.yellowDuration + config.allRedDuration;
            prev = s.phase;
            if (s.time + duration <= log.episodeLength + eps)
                out.emplace_back(s.intersection, s.time);
        }
        return out;
    }

}
