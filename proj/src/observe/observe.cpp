#include "tsc/observe.h"

#include <cmath>

namespace tsc {

    int PhaseObservation::segmentTotal(int segment) const {
        int total = 0;
        for (const auto &l : lanes)
            if (segment >= 1 && segment <= static_cast<int>(l.approaching.size()))
                total += l.approaching[segment - 1];
        return total;
    }

    int PhaseObservation::approachingTotal() const {
        int total = 0;
        for (const auto &l : lanes)
            for (int n : l.approaching)
                total += n;
        return total;
    }

    int IntersectionObservation::segmentCount() const {
        return static_cast<int>(phases[0].lanes[0].approaching.size());
    }

    int IntersectionObservation::totalQueued() const {
        int total = 0;
        for (const auto &p : phases)
            total += p.queuedTotal();
        return total;
    }

    LaneObservation observeLane(const SimState &state, const SimConfig &config, int lane) {
        const Lane &l = state.network->lanes().at(lane);
        LaneObservation obs;
        obs.laneId = l.id;
        obs.approaching.assign(l.segmentCount, 0);
        const double segLength = l.length / l.segmentCount;
        for (int vid : state.lanes[lane].vehicles) {
            const VehicleState &v = state.vehicles[vid];
            if (v.speed < config.vStop) {
                obs.queued++;
                continue;
            }
            double toStop = std::max(0.0, l.length - v.lanePosition);
            int seg = 1;
            while (seg < l.segmentCount && toStop > seg * segLength + 1e-9)
                seg++;
            obs.approaching[seg - 1]++;
        }
        return obs;
    }

    IntersectionObservation observe(const SimState &state, const SimConfig &config, int intersection) {
        const RoadNetwork &net = *state.network;
        IntersectionObservation obs;
        obs.intersection = net.intersections().at(intersection).id;
        obs.time = state.time;
        for (const Phase &p : phaseTable(net, intersection)) {
            PhaseObservation &po = obs.phase(p.id);
            po.phase = p.id;
            po.approaches = p.approaches;
            for (int k = 0; k < 2; k++) {
                int lane = p.allowedLanes[k];
                po.lanes[k] = observeLane(state, config, lane);
                if (auto down = net.lanes()[lane].downstreamRoad) {
                    if (net.intersectionAtEnd(*down)) {
                        for (int dl : net.roads()[*down].lanes)
                            po.downstreamQueued += observeLane(state, config, dl).queued;
                    }
                }
            }
        }
        return obs;
    }

    IntersectionObservation emptyObservation(int segments) {
        IntersectionObservation obs;
        const std::array<std::array<Approach, 2>, 4> sides = {{{Approach::East, Approach::West},
                                                               {Approach::East, Approach::West},
                                                               {Approach::North, Approach::South},
                                                               {Approach::North, Approach::South}}};
        for (int i = 0; i < kPhaseCount; i++) {
            obs.phases[i].phase = kPhases[i];
            obs.phases[i].approaches = sides[i];
            for (auto &l : obs.phases[i].lanes)
                l.approaching.assign(segments, 0);
        }
        return obs;
    }

}
