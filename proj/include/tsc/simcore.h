#pragma once

#include "tsc/netmodel.h"

#include <cstdint>
#include <deque>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace tsc {

    struct SimConfig {
        double tick = 1.0;
        double greenDuration = 30.0;
        double yellowDuration = 3.0;
        double allRedDuration = 2.0;
        double vStop = 0.1;
        // 40 km/h; a 300 m lane takes exactly 27 ticks.
        double freeFlowSpeed = 100.0 / 9.0;
        double dischargeHeadway = 2.0;
        double episodeLength = 3600.0;
        // Road length occupied by one vehicle.
        double vehicleSlot = 5.0;
        std::uint64_t seed = 0;

        // Throws ConfigError. Stage durations must be whole multiples of the tick.
        void validate() const;
        int ticksFor(double seconds) const;
    };

    enum class SignalStage { Green, Yellow, AllRed };

    struct SignalState {
        // Empty until the first green has been served.
        std::optional<PhaseId> activePhase;
        SignalStage stage = SignalStage::AllRed;
        int stageElapsed = 0;
        std::optional<PhaseId> pendingPhase;
        // Set when a green stage completes; cleared by applyAction.
        bool awaitingAction = true;

        bool allows(PhaseId p) const { return stage == SignalStage::Green && activePhase == p; }
        bool operator==(const SignalState &) const = default;
    };

    enum class VehicleStatus { Pending, Deferred, Active, Finished };

    struct VisitWait {
        int intersection = -1;
        double wait = 0.0;
        bool operator==(const VisitWait &) const = default;
    };

    struct VehicleState {
        std::string id;
        std::vector<int> route;  // road indices
        std::vector<int> laneRoute;  // lane used on each road of the route
        int routeIndex = 0;
        int lane = -1;
        double lanePosition = 0.0;  // meters from lane start
        double speed = 0.0;
        double maxSpeed = 0.0;
        double spawnTime = 0.0;
        std::optional<double> finishTime;
        double accumulatedWait = 0.0;
        VehicleStatus status = VehicleStatus::Pending;
        std::vector<VisitWait> visits;
        bool operator==(const VehicleState &) const = default;
    };

    struct LaneState {
        std::deque<int> vehicles;  // front is nearest the stop line
        double lastDischarge = -std::numeric_limits<double>::infinity();
        bool operator==(const LaneState &) const = default;
    };

    struct SimState {
        std::shared_ptr<const RoadNetwork> network;
        double time = 0.0;
        std::vector<VehicleState> vehicles;  // every scheduled vehicle, spawn order
        std::size_t nextPending = 0;
        std::deque<int> deferred;
        std::vector<LaneState> lanes;
        std::vector<SignalState> signals;
        std::size_t spawnedCount = 0;
        std::size_t finishedCount = 0;
        std::size_t deferralEvents = 0;

        std::size_t inNetworkCount() const;
        std::size_t deferredCount() const { return deferred.size(); }
    };

    // Resolves routes to lanes; throws RouteError on an unusable route.
    SimState initialState(std::shared_ptr<const RoadNetwork> network, const FlowSpec &flow);

    /// One tick: spawn due vehicles (deferring when the entry lane is full), release the
    /// head vehicle of each lane whose gate is open, move vehicles at the gap-limited free
    /// speed, accrue waiting time for vehicles slower than v_stop, then advance signals.
    void advance(SimState &state, const SimConfig &config);
    SimState step(SimState state, const SimConfig &config);

    bool isSwitchTime(const SimState &state, int intersection);
    // Same phase restarts green immediately; a change inserts yellow then all-red.
    // Throws NotSwitchTime mid-stage.
    void applyActionInPlace(SimState &state, const SimConfig &config, int intersection, PhaseId phase);
    SimState applyAction(SimState state, const SimConfig &config, int intersection, PhaseId phase);
    // Throws InvalidPhase for an index outside the action space.
    SimState applyAction(SimState state, const SimConfig &config, int intersection, int phaseIndex);

    // True when a vehicle at the stop line of `lane` may be released by the signal.
    bool laneHasGreen(const SimState &state, int lane);
    // Active vehicles slower than v_stop, network-wide.
    int queuedVehicles(const SimState &state, const SimConfig &config);

}
