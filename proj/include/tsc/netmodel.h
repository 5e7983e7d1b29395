#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace tsc {

    enum class Movement { Through, Left, Right };

    // Side of the intersection a vehicle arrives from.
    enum class Approach { North, South, East, West };

    // Enum order doubles as the tie-break order used by the greedy controllers.
    enum class PhaseId { ETWT = 0, ELWL = 1, NTST = 2, NLSL = 3 };

    inline constexpr int kPhaseCount = 4;
    inline constexpr std::array<PhaseId, kPhaseCount> kPhases = {
        PhaseId::ETWT, PhaseId::ELWL, PhaseId::NTST, PhaseId::NLSL};

    constexpr int phaseIndex(PhaseId p) { return static_cast<int>(p); }
    PhaseId phaseAt(int index);

    std::string_view toString(PhaseId p);
    std::string_view toString(Movement m);
    std::string_view toString(Approach a);

    // Trims surrounding whitespace and matches case-insensitively.
    std::optional<PhaseId> phaseFromString(std::string_view text);

    struct Point {
        double x = 0.0;
        double y = 0.0;
        bool operator==(const Point &) const = default;
    };

    struct Node {
        std::string id;
        Point point;
        bool boundary = false;
        bool operator==(const Node &) const = default;
    };

    struct Road {
        std::string id;
        int from = -1;
        int to = -1;
        std::vector<Point> points;
        double length = 0.0;
        std::vector<int> lanes;
        bool operator==(const Road &) const = default;
    };

    /// A movement lane: one per (incoming road, movement). Roads that end at a
    /// boundary node carry a single exit lane with movement Through.
    struct Lane {
        std::string id;
        int road = -1;
        Movement movement = Movement::Through;
        Approach approach = Approach::North;
        double length = 0.0;
        int segmentCount = 3;
        // Exit road fed by this movement; empty when the lane leaves the network.
        std::optional<int> downstreamRoad;
        bool controlled = false;
        bool operator==(const Lane &) const = default;
    };

    struct Turn {
        int inRoad = -1;
        Movement movement = Movement::Through;
        int outRoad = -1;
        bool operator==(const Turn &) const = default;
    };

    struct Intersection {
        std::string id;
        int node = -1;
        // Indexed [approach][movement]; -1 where absent (right turns may be).
        std::array<std::array<int, 3>, 4> movementLanes{};
        std::vector<Turn> turns;
        std::vector<int> outgoingRoads;

        int lane(Approach a, Movement m) const {
            return movementLanes[static_cast<int>(a)][static_cast<int>(m)];
        }
        bool operator==(const Intersection &) const = default;
    };

    struct Phase {
        PhaseId id = PhaseId::ETWT;
        Movement movement = Movement::Through;
        std::array<Approach, 2> approaches{};
        std::array<int, 2> allowedLanes{};
    };

    /// Raw topology handed to RoadNetwork; lanes and intersections are derived.
    struct NetworkDraft {
        std::vector<Node> nodes;
        struct DraftRoad {
            std::string id;
            std::string from;
            std::string to;
            std::vector<Point> points;
        };
        std::vector<DraftRoad> roads;
        struct DraftTurn {
            std::string node;
            std::string inRoad;
            std::string outRoad;
            Movement movement = Movement::Through;
        };
        std::vector<DraftTurn> turns;
    };

    class RoadNetwork {
    public:
        RoadNetwork() = default;
        // Throws TopologyError on dangling references or malformed intersections.
        explicit RoadNetwork(const NetworkDraft &draft, int segmentCount = 3);

        const std::vector<Node> &nodes() const { return nodes_; }
        const std::vector<Road> &roads() const { return roads_; }
        const std::vector<Lane> &lanes() const { return lanes_; }
        const std::vector<Intersection> &intersections() const { return intersections_; }
        std::set<std::string> boundaryNodes() const;

        std::optional<int> findRoad(std::string_view id) const;
        std::optional<int> findLane(std::string_view id) const;
        std::optional<int> findIntersection(std::string_view id) const;
        // Intersection controlling the end of `road`, if the road does not exit the network.
        std::optional<int> intersectionAtEnd(int road) const;

        // Lane of `road` used by a vehicle heading to `nextRoad`. Without a next road the
        // vehicle takes the exit lane, or the through lane when the road ends at an
        // intersection. Returns nullopt when `nextRoad` is not reachable via a turn.
        std::optional<int> laneToward(int road, std::optional<int> nextRoad) const;

        bool operator==(const RoadNetwork &) const = default;

    private:
        std::vector<Node> nodes_;
        std::vector<Road> roads_;
        std::vector<Lane> lanes_;
        std::vector<Intersection> intersections_;
        std::vector<int> nodeToIntersection_;
        std::map<std::string, int, std::less<>> roadIndex_;
    };

    /// Fixed order ETWT, ELWL, NTST, NLSL. Right-turn lanes belong to no phase.
    std::array<Phase, kPhaseCount> phaseTable(const RoadNetwork &network, int intersection);
    Phase phaseOf(const RoadNetwork &network, int intersection, PhaseId id);

    struct VehicleFlow {
        std::vector<std::string> route;
        double startTime = 0.0;
        double endTime = 0.0;
        double interval = 1.0;
        double maxSpeed = 100.0 / 9.0;
        bool operator==(const VehicleFlow &) const = default;
    };

    struct ScheduledVehicle {
        std::string id;
        std::size_t entry = 0;
        double spawnTime = 0.0;
        std::vector<std::string> route;
        double maxSpeed = 0.0;
    };

    struct FlowSpec {
        std::vector<VehicleFlow> entries;

        // Sum over entries of floor((end - start) / interval) + 1.
        std::size_t vehicleCount() const;
        // Vehicles ordered by spawn time, then entry, then repetition.
        std::vector<ScheduledVehicle> expand() const;
    };

    // CityFlow-compatible ingestion. See docs/formats.md for the subset read.
    RoadNetwork loadRoadnet(const std::filesystem::path &path);
    RoadNetwork parseRoadnet(std::string_view json);
    FlowSpec loadFlow(const std::filesystem::path &path);
    FlowSpec parseFlow(std::string_view json);
    // Throws RouteError if a route references a missing road or an impossible turn.
    void validateFlow(const FlowSpec &flow, const RoadNetwork &network);

    std::string roadnetToJson(const RoadNetwork &network);
    std::string flowToJson(const FlowSpec &flow);
    void saveRoadnet(const RoadNetwork &network, const std::filesystem::path &path);
    void saveFlow(const FlowSpec &flow, const std::filesystem::path &path);

    /// rows x cols grid of four-way intersections spaced `laneLength` apart, ringed by
    /// boundary nodes. Intersection ids are "intersection_<col>_<row>" (1-based).
    RoadNetwork synthGrid(int rows, int cols, double laneLength);

    struct SynthFlowOptions {
        double duration = 3600.0;
        // Mean arrivals per second on each entry road, keyed by the approach the
        // entry road feeds. Missing approaches use `defaultRate`.
        double defaultRate = 0.05;
        std::map<Approach, double> rateByApproach;
        double leftProbability = 0.15;
        double rightProbability = 0.15;
        double maxSpeed = 100.0 / 9.0;
        std::uint64_t seed = 0;
    };

    /// Poisson arrivals on every boundary entry road; routes are random walks that
    /// end on the first exit road reached. One flow entry per vehicle.
    FlowSpec synthFlow(const RoadNetwork &network, const SynthFlowOptions &options);

}
