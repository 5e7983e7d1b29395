#pragma once

#include "tsc/netmodel.h"
#include "tsc/simcore.h"

#include <array>
#include <string>
#include <vector>

namespace tsc {

    struct LaneObservation {
        std::string laneId;
        int queued = 0;
        // approaching[0] is segment 1, adjacent to the stop line.
        std::vector<int> approaching;
        bool operator==(const LaneObservation &) const = default;
    };

    struct PhaseObservation {
        PhaseId phase = PhaseId::ETWT;
        std::array<Approach, 2> approaches{};
        std::array<LaneObservation, 2> lanes;
        // Queued vehicles on the exit roads this phase feeds; 0 at the network boundary.
        int downstreamQueued = 0;

        int queuedTotal() const { return lanes[0].queued + lanes[1].queued; }
        // 1-based segment, as printed in prompts.
        int segmentTotal(int segment) const;
        int approachingTotal() const;
        bool operator==(const PhaseObservation &) const = default;
    };

    struct IntersectionObservation {
        std::string intersection;
        double time = 0.0;
        std::array<PhaseObservation, kPhaseCount> phases;  // ETWT, ELWL, NTST, NLSL

        const PhaseObservation &phase(PhaseId p) const { return phases[phaseIndex(p)]; }
        PhaseObservation &phase(PhaseId p) { return phases[phaseIndex(p)]; }
        int segmentCount() const;
        int totalQueued() const;
        bool operator==(const IntersectionObservation &) const = default;
    };

    /// Queued = speed below v_stop, anywhere on the lane. Approaching vehicles are
    /// binned by distance to the stop line; a vehicle on a segment boundary belongs
    /// to the segment nearer the stop line.
    LaneObservation observeLane(const SimState &state, const SimConfig &config, int lane);
    IntersectionObservation observe(const SimState &state, const SimConfig &config, int intersection);

    /// Zero-filled observation with `segments` bins per lane, for tests and tooling.
    IntersectionObservation emptyObservation(int segments = 3);

}
