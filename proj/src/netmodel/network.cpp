#include "tsc/netmodel.h"
#include "tsc/errors.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>

namespace tsc {

    PhaseId phaseAt(int index) {
        if (index < 0 || index >= kPhaseCount)
            throw InvalidPhase("phase index out of range: " + std::to_string(index));
        return kPhases[index];
    }

    std::string_view toString(PhaseId p) {
        switch (p) {
            case PhaseId::ETWT: return "ETWT";
            case PhaseId::ELWL: return "ELWL";
            case PhaseId::NTST: return "NTST";
            case PhaseId::NLSL: return "NLSL";
        }
        return "?";
    }

    std::string_view toString(Movement m) {
        switch (m) {
            case Movement::Through: return "through";
            case Movement::Left: return "left";
            case Movement::Right: return "right";
        }
        return "?";
    }

    std::string_view toString(Approach a) {
        switch (a) {
            case Approach::North: return "North";
            case Approach::South: return "South";
            case Approach::East: return "East";
            case Approach::West: return "West";
        }
        return "?";
    }

    std::optional<PhaseId> phaseFromString(std::string_view text) {
        auto isSpace = [](unsigned char c) { return std::isspace(c) != 0; };
        while (!text.empty() && isSpace(text.front()))
            text.remove_prefix(1);
        while (!text.empty() && isSpace(text.back()))
            text.remove_suffix(1);
        for (PhaseId p : kPhases) {
            std::string_view name = toString(p);
            if (name.size() != text.size())
                continue;
            bool same = std::equal(name.begin(), name.end(), text.begin(), [](char a, char b) {
                return std::toupper(static_cast<unsigned char>(a)) ==
                       std::toupper(static_cast<unsigned char>(b));
            });
            if (same)
                return p;
        }
        return std::nullopt;
    }

    namespace {

        double polylineLength(const std::vector<Point> &points) {
            double length = 0.0;
            for (std::size_t i = 0; i + 1 < points.size(); i++)
                length += std::hypot(points[i + 1].x - points[i].x, points[i + 1].y - points[i].y);
            return length;
        }

        // A road heading east arrives at its end node from the west side, and so on.
        Approach arrivalSide(const std::vector<Point> &points) {
            const Point &a = points[points.size() - 2];
            const Point &b = points.back();
            double dx = b.x - a.x;
            double dy = b.y - a.y;
            if (std::abs(dx) >= std::abs(dy))
                return dx > 0 ? Approach::West : Approach::East;
            return dy > 0 ? Approach::South : Approach::North;
        }

        constexpr std::array<Movement, 3> kLaneOrder = {Movement::Left, Movement::Through, Movement::Right};

    }

    RoadNetwork::RoadNetwork(const NetworkDraft &draft, int segmentCount) {
        if (segmentCount < 1)
            throw TopologyError("segment count must be at least 1");
        std::unordered_map<std::string, int> nodeIndex;
        nodes_ = draft.nodes;
        for (std::size_t i = 0; i < nodes_.size(); i++) {
            if (!nodeIndex.emplace(nodes_[i].id, static_cast<int>(i)).second)
                throw TopologyError("duplicate node id: " + nodes_[i].id);
        }

        std::unordered_map<std::string, int> roadIndex;
        for (const auto &dr : draft.roads) {
            Road road;
            road.id = dr.id;
            auto from = nodeIndex.find(dr.from);
            auto to = nodeIndex.find(dr.to);
            if (from == nodeIndex.end())
                throw TopologyError("road " + dr.id + " starts at unknown node " + dr.from);
            if (to == nodeIndex.end())
                throw TopologyError("road " + dr.id + " ends at unknown node " + dr.to);
            road.from = from->second;
            road.to = to->second;
            road.points = dr.points;
            if (road.points.size() < 2)
                road.points = {nodes_[road.from].point, nodes_[road.to].point};
            road.length = polylineLength(road.points);
            if (!(road.length > 0.0))
                throw TopologyError("road " + dr.id + " has zero length");
            if (!roadIndex.emplace(road.id, static_cast<int>(roads_.size())).second)
                throw TopologyError("duplicate road id: " + road.id);
            roads_.push_back(std::move(road));
        }

        roadIndex_.insert(roadIndex.begin(), roadIndex.end());
        nodeToIntersection_.assign(nodes_.size(), -1);
        for (std::size_t n = 0; n < nodes_.size(); n++) {
            if (nodes_[n].boundary)
                continue;
            Intersection inter;
            inter.id = nodes_[n].id;
            inter.node = static_cast<int>(n);
            for (auto &row : inter.movementLanes)
                row.fill(-1);
            nodeToIntersection_[n] = static_cast<int>(intersections_.size());
            intersections_.push_back(std::move(inter));
        }

        for (const auto &dt : draft.turns) {
            auto node = nodeIndex.find(dt.node);
            if (node == nodeIndex.end())
                throw TopologyError("turn references unknown node " + dt.node);
            int interIdx = nodeToIntersection_[node->second];
            if (interIdx < 0)
                throw TopologyError("turn declared at boundary node " + dt.node);
            auto in = roadIndex.find(dt.inRoad);
            auto out = roadIndex.find(dt.outRoad);
            if (in == roadIndex.end())
                throw TopologyError("turn references unknown road " + dt.inRoad);
            if (out == roadIndex.end())
                throw TopologyError("turn references unknown road " + dt.outRoad);
            if (roads_[in->second].to != node->second || roads_[out->second].from != node->second)
                throw TopologyError("turn " + dt.inRoad + " -> " + dt.outRoad + " does not pass through " +
                                    dt.node);
            auto &turns = intersections_[interIdx].turns;
            Turn turn{in->second, dt.movement, out->second};
            bool duplicate = std::any_of(turns.begin(), turns.end(), [&](const Turn &t) {
                return t.inRoad == turn.inRoad && t.movement == turn.movement;
            });
            if (duplicate)
                throw TopologyError("road " + dt.inRoad + " declares two " +
                                    std::string(toString(dt.movement)) + " turns at " + dt.node);
            turns.push_back(turn);
        }

        // Derive movement lanes.
        for (std::size_t r = 0; r < roads_.size(); r++) {
            Road &road = roads_[r];
            int interIdx = nodeToIntersection_[road.to];
            auto addLane = [&](Movement m, Approach a, std::optional<int> downstream, bool controlled) {
                Lane lane;
                lane.id = road.id + "/" + std::string(toString(m));
                lane.road = static_cast<int>(r);
                lane.movement = m;
                lane.approach = a;
                lane.length = road.length;
                lane.segmentCount = segmentCount;
                lane.downstreamRoad = downstream;
                lane.controlled = controlled;
                road.lanes.push_back(static_cast<int>(lanes_.size()));
                lanes_.push_back(std::move(lane));
                return static_cast<int>(lanes_.size() - 1);
            };
            Approach side = arrivalSide(road.points);
            if (interIdx < 0) {
                addLane(Movement::Through, side, std::nullopt, false);
                continue;
            }
            Intersection &inter = intersections_[interIdx];
            for (Movement m : kLaneOrder) {
                for (const Turn &t : inter.turns) {
                    if (t.inRoad != static_cast<int>(r) || t.movement != m)
                        continue;
                    int &slot = inter.movementLanes[static_cast<int>(side)][static_cast<int>(m)];
                    if (slot >= 0)
                        throw TopologyError("intersection " + inter.id + " has two " +
                                            std::string(toString(side)) + " approaches");
                    slot = addLane(m, side, t.outRoad, m != Movement::Right);
                }
            }
        }

        for (auto &inter : intersections_) {
            for (std::size_t r = 0; r < roads_.size(); r++) {
                if (roads_[r].from == inter.node)
                    inter.outgoingRoads.push_back(static_cast<int>(r));
            }
            for (Approach a : {Approach::North, Approach::South, Approach::East, Approach::West}) {
                for (Movement m : {Movement::Through, Movement::Left}) {
                    if (inter.lane(a, m) < 0)
                        throw TopologyError("intersection " + inter.id + " lacks a " +
                                            std::string(toString(m)) + " lane from the " +
                                            std::string(toString(a)));
                }
            }
        }
    }

    std::set<std::string> RoadNetwork::boundaryNodes() const {
        std::set<std::string> out;
        for (const auto &n : nodes_)
            if (n.boundary)
                out.insert(n.id);
        return out;
    }

    std::optional<int> RoadNetwork::findRoad(std::string_view id) const {
        auto it = roadIndex_.find(id);
        if (it == roadIndex_.end())
            return std::nullopt;
        return it->second;
    }

    std::optional<int> RoadNetwork::findLane(std::string_view id) const {
        for (std::size_t i = 0; i < lanes_.size(); i++)
            if (lanes_[i].id == id)
                return static_cast<int>(i);
        return std::nullopt;
    }

    std::optional<int> RoadNetwork::findIntersection(std::string_view id) const {
        for (std::size_t i = 0; i < intersections_.size(); i++)
            if (intersections_[i].id == id)
                return static_cast<int>(i);
        return std::nullopt;
    }

    std::optional<int> RoadNetwork::intersectionAtEnd(int road) const {
        int idx = nodeToIntersection_.at(roads_.at(road).to);
        if (idx < 0)
            return std::nullopt;
        return idx;
    }

    std::optional<int> RoadNetwork::laneToward(int road, std::optional<int> nextRoad) const {
        const Road &r = roads_.at(road);
        auto inter = intersectionAtEnd(road);
        if (!nextRoad) {
            for (int l : r.lanes)
                if (lanes_[l].movement == Movement::Through)
                    return l;
            return std::nullopt;
        }
        if (!inter)
            return std::nullopt;
        for (int l : r.lanes)
            if (lanes_[l].downstreamRoad == nextRoad)
                return l;
        return std::nullopt;
    }

    std::array<Phase, kPhaseCount> phaseTable(const RoadNetwork &network, int intersection) {
        std::array<Phase, kPhaseCount> table;
        for (int i = 0; i < kPhaseCount; i++)
            table[i] = phaseOf(network, intersection, kPhases[i]);
        return table;
    }

    Phase phaseOf(const RoadNetwork &network, int intersection, PhaseId id) {
        const Intersection &inter = network.intersections().at(intersection);
        Phase phase;
        phase.id = id;
        switch (id) {
            case PhaseId::ETWT:
                phase.movement = Movement::Through;
                phase.approaches = {Approach::East, Approach::West};
                break;
            case PhaseId::ELWL:
                phase.movement = Movement::Left;
                phase.approaches = {Approach::East, Approach::West};
                break;
            case PhaseId::NTST:
                phase.movement = Movement::Through;
                phase.approaches = {Approach::North, Approach::South};
                break;
            case PhaseId::NLSL:
                phase.movement = Movement::Left;
                phase.approaches = {Approach::North, Approach::South};
                break;
        }
        phase.allowedLanes = {inter.lane(phase.approaches[0], phase.movement),
                              inter.lane(phase.approaches[1], phase.movement)};
        return phase;
    }

    std::size_t FlowSpec::vehicleCount() const {
        std::size_t total = 0;
        for (const auto &e : entries)
            total += static_cast<std::size_t>(std::floor((e.endTime - e.startTime) / e.interval + 1e-9)) + 1;
        return total;
    }

    std::vector<ScheduledVehicle> FlowSpec::expand() const {
        std::vector<ScheduledVehicle> out;
        out.reserve(vehicleCount());
        for (std::size_t i = 0; i < entries.size(); i++) {
            const auto &e = entries[i];
            auto reps = static_cast<std::size_t>(std::floor((e.endTime - e.startTime) / e.interval + 1e-9)) + 1;
            for (std::size_t k = 0; k < reps; k++) {
                ScheduledVehicle v;
                v.id = "flow_" + std::to_string(i) + "_" + std::to_string(k);
                v.entry = i;
                v.spawnTime = e.startTime + static_cast<double>(k) * e.interval;
                v.route = e.route;
                v.maxSpeed = e.maxSpeed;
                out.push_back(std::move(v));
            }
        }
        std::stable_sort(out.begin(), out.end(), [](const ScheduledVehicle &a, const ScheduledVehicle &b) {
            return a.spawnTime < b.spawnTime;
        });
        return out;
    }

    void validateFlow(const FlowSpec &flow, const RoadNetwork &network) {
        for (std::size_t i = 0; i < flow.entries.size(); i++) {
            const auto &route = flow.entries[i].route;
            if (route.empty())
                throw RouteError("flow entry " + std::to_string(i) + " has an empty route");
            std::optional<int> prev;
            for (const auto &roadId : route) {
                auto road = network.findRoad(roadId);
                if (!road)
                    throw RouteError("flow entry " + std::to_string(i) + " references missing road " + roadId);
                if (prev && !network.laneToward(*prev, *road))
                    throw RouteError("flow entry " + std::to_string(i) + " has no turn from " +
                                     network.roads()[*prev].id + " to " + roadId);
                prev = road;
            }
        }
    }

}
