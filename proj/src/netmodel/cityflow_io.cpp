#include "tsc/netmodel.h"
#include "tsc/errors.h"
#include "tsc/util.h"

#include "json.hpp"

#include <fstream>
#include <map>

using nlohmann::json;

namespace tsc {

    namespace {

        const json &member(const json &obj, const char *key, const std::string &where) {
            if (!obj.is_object())
                throw ParseError(where + ": expected an object");
            auto it = obj.find(key);
            if (it == obj.end())
                throw ParseError(where + ": missing \"" + key + "\"");
            return *it;
        }

        const json &memberArray(const json &obj, const char *key, const std::string &where) {
            const json &v = member(obj, key, where);
            if (!v.is_array())
                throw ParseError(where + ": \"" + key + "\" must be an array");
            return v;
        }

        template <typename T>
        T memberAs(const json &obj, const char *key, const std::string &where) {
            const json &v = member(obj, key, where);
            try {
                return v.get<T>();
            } catch (const json::exception &) {
                throw ParseError(where + ": \"" + key + "\" has the wrong type");
            }
        }

        Point readPoint(const json &v, const std::string &where) {
            return {memberAs<double>(v, "x", where), memberAs<double>(v, "y", where)};
        }

        json parseDocument(std::string_view text, const char *what) {
            try {
                return json::parse(text.begin(), text.end());
            } catch (const json::parse_error &e) {
                throw ParseError(std::string(what) + ": malformed JSON: " + e.what());
            }
        }

        const std::map<std::string, Movement> kTurnTypes = {
            {"go_straight", Movement::Through},
            {"turn_left", Movement::Left},
            {"turn_right", Movement::Right},
        };

        std::string_view turnTypeName(Movement m) {
            switch (m) {
                case Movement::Through: return "go_straight";
                case Movement::Left: return "turn_left";
                case Movement::Right: return "turn_right";
            }
            return "go_straight";
        }

        // CityFlow lane index convention on a three-lane road.
        int laneIndexFor(Movement m) {
            switch (m) {
                case Movement::Left: return 0;
                case Movement::Through: return 1;
                case Movement::Right: return 2;
            }
            return 1;
        }

    }

    RoadNetwork parseRoadnet(std::string_view text) {
        json doc = parseDocument(text, "roadnet");
        if (!doc.is_object())
            throw ParseError("roadnet: top level must be an object");
        const json &inters = memberArray(doc, "intersections", "roadnet");
        const json &roads = memberArray(doc, "roads", "roadnet");

        NetworkDraft draft;
        for (std::size_t i = 0; i < inters.size(); i++) {
            std::string where = "intersections[" + std::to_string(i) + "]";
            const json &iv = inters[i];
            Node node;
            node.id = memberAs<std::string>(iv, "id", where);
            node.point = readPoint(member(iv, "point", where), where + ".point");
            node.boundary = iv.contains("virtual") ? memberAs<bool>(iv, "virtual", where) : false;
            draft.nodes.push_back(node);
            if (node.boundary)
                continue;
            const json &links = memberArray(iv, "roadLinks", where);
            for (std::size_t k = 0; k < links.size(); k++) {
                std::string lw = where + ".roadLinks[" + std::to_string(k) + "]";
                auto type = memberAs<std::string>(links[k], "type", lw);
                auto mt = kTurnTypes.find(type);
                if (mt == kTurnTypes.end())
                    throw ParseError(lw + ": unknown turn type " + type);
                draft.turns.push_back({node.id, memberAs<std::string>(links[k], "startRoad", lw),
                                       memberAs<std::string>(links[k], "endRoad", lw), mt->second});
            }
        }
        for (std::size_t i = 0; i < roads.size(); i++) {
            std::string where = "roads[" + std::to_string(i) + "]";
            const json &rv = roads[i];
            NetworkDraft::DraftRoad road;
            road.id = memberAs<std::string>(rv, "id", where);
            road.from = memberAs<std::string>(rv, "startIntersection", where);
            road.to = memberAs<std::string>(rv, "endIntersection", where);
            const json &pts = memberArray(rv, "points", where);
            for (std::size_t k = 0; k < pts.size(); k++)
                road.points.push_back(readPoint(pts[k], where + ".points[" + std::to_string(k) + "]"));
            if (road.points.size() < 2)
                throw ParseError(where + ": a road needs at least two points");
            draft.roads.push_back(std::move(road));
        }
        return RoadNetwork(draft);
    }

    RoadNetwork loadRoadnet(const std::filesystem::path &path) {
        return parseRoadnet(readFile(path));
    }

    FlowSpec parseFlow(std::string_view text) {
        json doc = parseDocument(text, "flow");
        if (!doc.is_array())
            throw ParseError("flow: top level must be an array");
        FlowSpec flow;
        flow.entries.reserve(doc.size());
        for (std::size_t i = 0; i < doc.size(); i++) {
            std::string where = "flow[" + std::to_string(i) + "]";
            const json &ev = doc[i];
            VehicleFlow e;
            const json &route = memberArray(ev, "route", where);
            for (const auto &r : route) {
                if (!r.is_string())
                    throw ParseError(where + ": route entries must be road ids");
                e.route.push_back(r.get<std::string>());
            }
            if (e.route.empty())
                throw ParseError(where + ": empty route");
            e.startTime = memberAs<double>(ev, "startTime", where);
            e.endTime = memberAs<double>(ev, "endTime", where);
            e.interval = memberAs<double>(ev, "interval", where);
            if (ev.contains("vehicle")) {
                const json &veh = ev["vehicle"];
                if (veh.contains("maxSpeed"))
                    e.maxSpeed = memberAs<double>(veh, "maxSpeed", where + ".vehicle");
            }
            if (!(e.interval > 0.0))
                throw ParseError(where + ": interval must be positive");
            if (e.endTime < e.startTime)
                throw ParseError(where + ": endTime precedes startTime");
            if (!(e.maxSpeed > 0.0))
                throw ParseError(where + ": maxSpeed must be positive");
            flow.entries.push_back(std::move(e));
        }
        return flow;
    }

    FlowSpec loadFlow(const std::filesystem::path &path) {
        return parseFlow(readFile(path));
    }

    std::string roadnetToJson(const RoadNetwork &network) {
        json inters = json::array();
        const auto &nodes = network.nodes();
        const auto &roads = network.roads();
        std::vector<int> interOfNode(nodes.size(), -1);
        for (std::size_t i = 0; i < network.intersections().size(); i++)
            interOfNode[network.intersections()[i].node] = static_cast<int>(i);

        for (std::size_t n = 0; n < nodes.size(); n++) {
            const Node &node = nodes[n];
            json iv;
            iv["id"] = node.id;
            iv["point"] = {{"x", node.point.x}, {"y", node.point.y}};
            iv["width"] = node.boundary ? 0.0 : 10.0;
            json roadIds = json::array();
            for (const auto &r : roads)
                if (r.from == static_cast<int>(n) || r.to == static_cast<int>(n))
                    roadIds.push_back(r.id);
            iv["roads"] = roadIds;
            json links = json::array();
            json lightphases = json::array();
            if (!node.boundary) {
                const Intersection &inter = network.intersections()[interOfNode[n]];
                std::vector<int> rightLinks;
                std::map<std::pair<int, int>, int> linkIndex;
                for (const Turn &t : inter.turns) {
                    json lane = {{"startLaneIndex", laneIndexFor(t.movement)},
                                 {"endLaneIndex", laneIndexFor(t.movement)},
                                 {"points", json::array()}};
                    json link = {{"type", turnTypeName(t.movement)},
                                 {"startRoad", roads[t.inRoad].id},
                                 {"endRoad", roads[t.outRoad].id},
                                 {"direction", laneIndexFor(t.movement)},
                                 {"laneLinks", json::array({lane})}};
                    int idx = static_cast<int>(links.size());
                    linkIndex[{t.inRoad, static_cast<int>(t.movement)}] = idx;
                    if (t.movement == Movement::Right)
                        rightLinks.push_back(idx);
                    links.push_back(std::move(link));
                }
                for (const Phase &p : phaseTable(network, interOfNode[n])) {
                    json avail = json::array();
                    for (int l : p.allowedLanes) {
                        const Lane &lane = network.lanes()[l];
                        avail.push_back(linkIndex.at({lane.road, static_cast<int>(lane.movement)}));
                    }
                    for (int r : rightLinks)
                        avail.push_back(r);
                    lightphases.push_back({{"time", 30}, {"availableRoadLinks", avail}});
                }
                json all = json::array();
                for (std::size_t k = 0; k < links.size(); k++)
                    all.push_back(k);
                iv["trafficLight"] = {{"roadLinkIndices", all}, {"lightphases", lightphases}};
            }
            iv["roadLinks"] = links;
            iv["virtual"] = node.boundary;
            inters.push_back(std::move(iv));
        }

        json rs = json::array();
        for (const auto &r : roads) {
            json pts = json::array();
            for (const auto &p : r.points)
                pts.push_back({{"x", p.x}, {"y", p.y}});
            json lanes = json::array();
            for (int k = 0; k < 3; k++)
                lanes.push_back({{"width", 3.2}, {"maxSpeed", 11.111}});
            rs.push_back({{"id", r.id},
                          {"points", pts},
                          {"lanes", lanes},
                          {"startIntersection", nodes[r.from].id},
                          {"endIntersection", nodes[r.to].id}});
        }
        json doc = {{"intersections", inters}, {"roads", rs}};
        return doc.dump(2);
    }

    std::string flowToJson(const FlowSpec &flow) {
        json doc = json::array();
        for (const auto &e : flow.entries) {
            json vehicle = {{"length", 5.0},     {"width", 2.0},        {"maxPosAcc", 2.0},
                            {"maxNegAcc", 4.5},  {"usualPosAcc", 2.0},  {"usualNegAcc", 4.5},
                            {"minGap", 2.5},     {"maxSpeed", e.maxSpeed}, {"headwayTime", 2.0}};
            doc.push_back({{"vehicle", vehicle},
                           {"route", e.route},
                           {"interval", e.interval},
                           {"startTime", e.startTime},
                           {"endTime", e.endTime}});
        }
        return doc.dump(2);
    }

    void saveRoadnet(const RoadNetwork &network, const std::filesystem::path &path) {
        writeFile(path, roadnetToJson(network));
    }

    void saveFlow(const FlowSpec &flow, const std::filesystem::path &path) {
        writeFile(path, flowToJson(flow));
    }

}
