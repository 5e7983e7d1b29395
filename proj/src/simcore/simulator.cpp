#include "tsc/simcore.h"
#include "tsc/errors.h"

#include <algorithm>
#include <cmath>

namespace tsc {

    namespace {

        constexpr double kEps = 1e-9;

        bool atStopLine(const VehicleState &v, const Lane &lane) {
            return v.lanePosition >= lane.length - kEps;
        }

        bool hasRoomAtEntry(const SimState &state, int lane, double slot) {
            const auto &q = state.lanes[lane].vehicles;
            return q.empty() || state.vehicles[q.back()].lanePosition >= slot - kEps;
        }

        void enterLane(SimState &state, int vid, int lane) {
            VehicleState &v = state.vehicles[vid];
            v.lane = lane;
            v.lanePosition = 0.0;
            state.lanes[lane].vehicles.push_back(vid);
            int road = state.network->lanes()[lane].road;
            if (auto inter = state.network->intersectionAtEnd(road))
                v.visits.push_back({*inter, 0.0});
        }

        void finish(SimState &state, int vid, double when) {
            VehicleState &v = state.vehicles[vid];
            v.status = VehicleStatus::Finished;
            v.finishTime = when;
            v.lane = -1;
            v.speed = 0.0;
            state.finishedCount++;
        }

        void spawnDue(SimState &state, const SimConfig &config) {
            // Deferred vehicles keep priority over newly due ones.
            std::deque<int> waiting;
            waiting.swap(state.deferred);
            while (state.nextPending < state.vehicles.size() &&
                   state.vehicles[state.nextPending].spawnTime <= state.time + kEps) {
                int vid = static_cast<int>(state.nextPending++);
                state.vehicles[vid].status = VehicleStatus::Deferred;
                state.spawnedCount++;
                waiting.push_back(vid);
            }
            for (int vid : waiting) {
                VehicleState &v = state.vehicles[vid];
                int lane = v.laneRoute.front();
                if (hasRoomAtEntry(state, lane, config.vehicleSlot)) {
                    v.status = VehicleStatus::Active;
                    v.speed = 0.0;
                    enterLane(state, vid, lane);
                } else {
                    state.deferred.push_back(vid);
                    state.deferralEvents++;
                }
            }
        }

        void discharge(SimState &state, const SimConfig &config) {
            const RoadNetwork &net = *state.network;
            const double endOfTick = state.time + config.tick;
            for (std::size_t l = 0; l < state.lanes.size(); l++) {
                LaneState &ls = state.lanes[l];
                const Lane &lane = net.lanes()[l];
                if (ls.vehicles.empty() || !net.intersectionAtEnd(lane.road))
                    continue;
                int vid = ls.vehicles.front();
                VehicleState &v = state.vehicles[vid];
                if (!atStopLine(v, lane))
                    continue;
                if (lane.controlled && !laneHasGreen(state, static_cast<int>(l)))
                    continue;
                if (state.time - ls.lastDischarge < config.dischargeHeadway - kEps)
                    continue;
                std::size_t next = static_cast<std::size_t>(v.routeIndex) + 1;
                if (next >= v.route.size()) {
                    ls.vehicles.pop_front();
                    ls.lastDischarge = state.time;
                    finish(state, vid, endOfTick);
                    continue;
                }
                int target = v.laneRoute[next];
                if (!hasRoomAtEntry(state, target, config.vehicleSlot))
                    continue;
                ls.vehicles.pop_front();
                ls.lastDischarge = state.time;
                v.routeIndex = static_cast<int>(next);
                enterLane(state, vid, target);
            }
        }

        void move(SimState &state, const SimConfig &config) {
            const RoadNetwork &net = *state.network;
            const double endOfTick = state.time + config.tick;
            for (std::size_t l = 0; l < state.lanes.size(); l++) {
                auto &q = state.lanes[l].vehicles;
                if (q.empty())
                    continue;
                const Lane &lane = net.lanes()[l];
                const bool exits = !net.intersectionAtEnd(lane.road);
                double limit = lane.length;
                std::deque<int> kept;
                for (int vid : q) {
                    VehicleState &v = state.vehicles[vid];
                    double speed = std::min(config.freeFlowSpeed, v.maxSpeed);
                    double target = std::min(v.lanePosition + speed * config.tick, limit);
                    target = std::max(target, v.lanePosition);
                    v.speed = (target - v.lanePosition) / config.tick;
                    v.lanePosition = target;
                    if (exits && v.lanePosition >= lane.length - kEps) {
                        v.lanePosition = lane.length;
                        finish(state, vid, endOfTick);
                        continue;
                    }
                    if (v.lanePosition >= lane.length - kEps)
                        v.lanePosition = lane.length;
                    limit = v.lanePosition - config.vehicleSlot;
                    kept.push_back(vid);
                }
                q.swap(kept);
            }
        }

        void accrueWait(SimState &state, const SimConfig &config) {
            for (const auto &ls : state.lanes) {
                for (int vid : ls.vehicles) {
                    VehicleState &v = state.vehicles[vid];
                    if (v.speed < config.vStop) {
                        v.accumulatedWait += config.tick;
                        if (!v.visits.empty())
                            v.visits.back().wait += config.tick;
                    }
                }
            }
        }

        void advanceSignals(SimState &state, const SimConfig &config) {
            for (auto &s : state.signals) {
                if (s.awaitingAction)
                    continue;
                s.stageElapsed++;
                switch (s.stage) {
                    case SignalStage::Yellow:
                        if (s.stageElapsed >= config.ticksFor(config.yellowDuration)) {
                            s.stage = SignalStage::AllRed;
                            s.stageElapsed = 0;
                        }
                        break;
                    case SignalStage::AllRed:
                        if (s.stageElapsed >= config.ticksFor(config.allRedDuration)) {
                            s.stage = SignalStage::Green;
                            s.activePhase = s.pendingPhase;
                            s.pendingPhase.reset();
                            s.stageElapsed = 0;
                        }
                        break;
                    case SignalStage::Green:
                        if (s.stageElapsed >= config.ticksFor(config.greenDuration)) {
                            s.awaitingAction = true;
                            s.stageElapsed = 0;
                        }
                        break;
                }
            }
        }

    }

    void SimConfig::validate() const {
        auto positive = [](double v, const char *name) {
            if (!(v > 0.0))
                throw ConfigError(std::string(name) + " must be positive");
        };
        positive(tick, "tick");
        positive(greenDuration, "green_duration");
        positive(yellowDuration, "yellow_duration");
        positive(allRedDuration, "all_red_duration");
        positive(vStop, "v_stop");
        positive(freeFlowSpeed, "free_flow_speed");
        positive(dischargeHeadway, "discharge_headway");
        positive(episodeLength, "episode_length");
        positive(vehicleSlot, "vehicle_slot");
        if (!(vStop < freeFlowSpeed))
            throw ConfigError("v_stop must be below free_flow_speed");
        for (double d : {greenDuration, yellowDuration, allRedDuration, episodeLength}) {
            double ratio = d / tick;
            if (std::abs(ratio - std::round(ratio)) > 1e-9)
                throw ConfigError("durations must be whole multiples of the tick");
        }
    }

    int SimConfig::ticksFor(double seconds) const {
        return static_cast<int>(std::lround(seconds / tick));
    }

    std::size_t SimState::inNetworkCount() const {
        std::size_t n = 0;
        for (const auto &l : lanes)
            n += l.vehicles.size();
        return n;
    }

    SimState initialState(std::shared_ptr<const RoadNetwork> network, const FlowSpec &flow) {
        SimState state;
        const RoadNetwork &net = *network;
        state.network = std::move(network);
        state.lanes.resize(net.lanes().size());
        state.signals.resize(net.intersections().size());
        auto scheduled = flow.expand();
        state.vehicles.reserve(scheduled.size());
        for (auto &sv : scheduled) {
            VehicleState v;
            v.id = sv.id;
            v.spawnTime = sv.spawnTime;
            v.maxSpeed = sv.maxSpeed;
            for (const auto &roadId : sv.route) {
                auto road = net.findRoad(roadId);
                if (!road)
                    throw RouteError("vehicle " + sv.id + " references missing road " + roadId);
                v.route.push_back(*road);
            }
            if (v.route.empty())
                throw RouteError("vehicle " + sv.id + " has an empty route");
            for (std::size_t i = 0; i < v.route.size(); i++) {
                std::optional<int> next;
                if (i + 1 < v.route.size())
                    next = v.route[i + 1];
                auto lane = net.laneToward(v.route[i], next);
                if (!lane)
                    throw RouteError("vehicle " + sv.id + " cannot turn from " + net.roads()[v.route[i]].id +
                                     (next ? " to " + net.roads()[*next].id : std::string(" (no lane)")));
                v.laneRoute.push_back(*lane);
            }
            state.vehicles.push_back(std::move(v));
        }
        return state;
    }

    void advance(SimState &state, const SimConfig &config) {
        spawnDue(state, config);
        discharge(state, config);
        move(state, config);
        accrueWait(state, config);
        advanceSignals(state, config);
        state.time += config.tick;
    }

    SimState step(SimState state, const SimConfig &config) {
        advance(state, config);
        return state;
    }

    bool isSwitchTime(const SimState &state, int intersection) {
        return state.signals.at(intersection).awaitingAction;
    }

    void applyActionInPlace(SimState &state, const SimConfig &, int intersection, PhaseId phase) {
        SignalState &s = state.signals.at(intersection);
        if (!s.awaitingAction)
            throw NotSwitchTime("intersection " + state.network->intersections()[intersection].id +
                                " is mid-stage at t=" + std::to_string(state.time));
        s.awaitingAction = false;
        s.stageElapsed = 0;
        if (s.activePhase == phase) {
            s.stage = SignalStage::Green;
            s.pendingPhase.reset();
        } else {
            s.stage = SignalStage::Yellow;
            s.pendingPhase = phase;
        }
    }

    SimState applyAction(SimState state, const SimConfig &config, int intersection, PhaseId phase) {
        applyActionInPlace(state, config, intersection, phase);
        return state;
    }

    SimState applyAction(SimState state, const SimConfig &config, int intersection, int phaseIndex) {
        return applyAction(std::move(state), config, intersection, phaseAt(phaseIndex));
    }

    bool laneHasGreen(const SimState &state, int lane) {
        const RoadNetwork &net = *state.network;
        const Lane &l = net.lanes().at(lane);
        auto inter = net.intersectionAtEnd(l.road);
        if (!inter)
            return true;
        if (!l.controlled)
            return true;
        const SignalState &s = state.signals[*inter];
        if (s.stage != SignalStage::Green || !s.activePhase)
            return false;
        Phase p = phaseOf(net, *inter, *s.activePhase);
        return p.allowedLanes[0] == lane || p.allowedLanes[1] == lane;
    }

    int queuedVehicles(const SimState &state, const SimConfig &config) {
        int n = 0;
        for (const auto &ls : state.lanes)
            for (int vid : ls.vehicles)
                if (state.vehicles[vid].speed < config.vStop)
                    n++;
        return n;
    }

}
