#include "doctest_tsc.h"

#include "tsc/errors.h"
#include "tsc/netmodel.h"

#include "scenarios.h"

#include <algorithm>
#include <random>
#include <set>

using namespace tsc;

namespace {

    int incomingLanes(const RoadNetwork &net, int intersection, bool controlledOnly) {
        int n = 0;
        for (const auto &lane : net.lanes()) {
            auto end = net.intersectionAtEnd(lane.road);
            if (end && *end == intersection && (!controlledOnly || lane.controlled))
                n++;
        }
        return n;
    }

    std::size_t closedFormCount(const FlowSpec &f) {
        std::size_t n = 0;
        for (const auto &e : f.entries)
            n += static_cast<std::size_t>((e.endTime - e.startTime) / e.interval) + 1;
        return n;
    }

}

TEST_SUITE("netmodel") {
    TEST_CASE("single-intersection grid has 12 incoming lanes, 8 of them controlled") {
        RoadNetwork net = synthGrid(1, 1, 300.0);
        REQUIRE(net.intersections().size() == 1);
        CHECK(incomingLanes(net, 0, false) == 12);
        CHECK(incomingLanes(net, 0, true) == 8);
        CHECK(net.boundaryNodes().size() == 4);
    }

    TEST_CASE("3x4 grid has 12 intersections") {
        RoadNetwork net = synthGrid(3, 4, 300.0);
        CHECK(net.intersections().size() == 12);
        for (int i = 0; i < 12; i++)
            CHECK(incomingLanes(net, i, true) == 8);
        CHECK(net.findIntersection("intersection_4_3").has_value());
        CHECK_FALSE(net.findIntersection("intersection_5_3").has_value());
    }

    TEST_CASE("interior movement lanes feed a road; boundary exit lanes feed nothing") {
        RoadNetwork net = synthGrid(2, 2, 300.0);
        int exits = 0, movement = 0;
        for (const auto &lane : net.lanes()) {
            const Road &road = net.roads()[lane.road];
            if (net.nodes()[road.to].boundary) {
                CHECK_FALSE(lane.downstreamRoad.has_value());
                CHECK_FALSE(lane.controlled);
                exits++;
            } else {
                CHECK(lane.downstreamRoad.has_value());
                movement++;
            }
            CHECK(lane.length > 0.0);
            CHECK(lane.segmentCount == 3);
        }
        CHECK(exits == 8);
        CHECK(movement == 4 * 12);
    }

    TEST_CASE("phase table follows the standard four-phase layout") {
        RoadNetwork net = synthGrid(1, 1, 300.0);
        const Intersection &x = net.intersections()[0];
        auto phases = phaseTable(net, 0);
        CHECK(phases[0].id == PhaseId::ETWT);
        CHECK(phases[1].id == PhaseId::ELWL);
        CHECK(phases[2].id == PhaseId::NTST);
        CHECK(phases[3].id == PhaseId::NLSL);
        std::set<int> etwt(phases[0].allowedLanes.begin(), phases[0].allowedLanes.end());
        CHECK(etwt == std::set<int>{x.lane(Approach::East, Movement::Through), x.lane(Approach::West, Movement::Through)});
        std::set<int> nlsl(phases[3].allowedLanes.begin(), phases[3].allowedLanes.end());
        CHECK(nlsl == std::set<int>{x.lane(Approach::North, Movement::Left), x.lane(Approach::South, Movement::Left)});
    }

    TEST_CASE("phases partition the controlled lanes on every grid intersection") {
        RoadNetwork net = synthGrid(2, 3, 250.0);
        for (int i = 0; i < static_cast<int>(net.intersections().size()); i++) {
            std::multiset<int> covered;
            for (const auto &p : phaseTable(net, i))
                covered.insert(p.allowedLanes.begin(), p.allowedLanes.end());
            std::multiset<int> controlled;
            for (int l = 0; l < static_cast<int>(net.lanes().size()); l++) {
                auto end = net.intersectionAtEnd(net.lanes()[l].road);
                if (end && *end == i && net.lanes()[l].controlled)
                    controlled.insert(l);
            }
            CHECK(covered == controlled);
            for (const auto &p : phaseTable(net, i))
                for (int l : p.allowedLanes)
                    CHECK(net.lanes()[l].movement != Movement::Right);
        }
    }

    TEST_CASE("phase names parse case-insensitively") {
        CHECK(phaseFromString(" etwt ") == PhaseId::ETWT);
        CHECK(phaseFromString("NlSl") == PhaseId::NLSL);
        CHECK_FALSE(phaseFromString("NSLT").has_value());
        CHECK_THROWS_AS(phaseAt(4), InvalidPhase);
        CHECK_THROWS_AS(phaseAt(-1), InvalidPhase);
    }

    TEST_CASE("malformed roadnet input is a ParseError") {
        CHECK_THROWS_AS(parseRoadnet("{}"), ParseError);
        CHECK_THROWS_AS(parseRoadnet("not json"), ParseError);
        CHECK_THROWS_AS(parseRoadnet(R"({"intersections": [], "roads": 3})"), ParseError);
    }

    TEST_CASE("dangling references are a TopologyError") {
        NetworkDraft d;
        d.nodes.push_back({"a", {0, 0}, true});
        d.roads.push_back({"r", "a", "missing", {{0, 0}, {1, 0}}});
        CHECK_THROWS_AS(RoadNetwork{d}, TopologyError);
    }

    TEST_CASE("an intersection without left-turn lanes is a TopologyError") {
        RoadNetwork full = synthGrid(1, 1, 300.0);
        NetworkDraft d;
        d.nodes = full.nodes();
        for (const auto &r : full.roads())
            d.roads.push_back({r.id, full.nodes()[r.from].id, full.nodes()[r.to].id, r.points});
        const Intersection &x = full.intersections()[0];
        for (const auto &t : x.turns)
            if (t.movement != Movement::Left)
                d.turns.push_back({full.nodes()[x.node].id, full.roads()[t.inRoad].id, full.roads()[t.outRoad].id,
                                   t.movement});
        CHECK_THROWS_AS(RoadNetwork{d}, TopologyError);
    }

    TEST_CASE("CityFlow roadnet with multi-lane roads collapses to movement lanes") {
        RoadNetwork net = loadRoadnet(TSC_FIXTURES "/mini_roadnet.json");
        REQUIRE(net.intersections().size() == 1);
        CHECK(net.boundaryNodes().size() == 4);
        CHECK(incomingLanes(net, 0, true) == 8);
        auto lane = net.findLane("in_W/through");
        REQUIRE(lane.has_value());
        CHECK(net.lanes()[*lane].approach == Approach::West);
        CHECK(net.lanes()[*lane].length == doctest::Approx(300.0));
        auto north = net.findLane("in_N/left");
        REQUIRE(north.has_value());
        CHECK(net.lanes()[*north].approach == Approach::North);
        CHECK(net.roads()[*net.lanes()[*north].downstreamRoad].id == "out_E");
    }

    TEST_CASE("roadnet serialization round-trips") {
        for (auto net : {synthGrid(1, 1, 300.0), synthGrid(2, 3, 200.0), loadRoadnet(TSC_FIXTURES "/mini_roadnet.json")}) {
            RoadNetwork again = parseRoadnet(roadnetToJson(net));
            CHECK(again == net);
        }
    }

    TEST_CASE("flow files expand to the closed-form vehicle count") {
        FlowSpec f = loadFlow(TSC_FIXTURES "/mini_flow.json");
        CHECK(f.vehicleCount() == 21 + 11 + 1);
        CHECK(f.expand().size() == f.vehicleCount());
        validateFlow(f, loadRoadnet(TSC_FIXTURES "/mini_roadnet.json"));
    }

    TEST_CASE("a single entry with start == end is exactly one vehicle") {
        FlowSpec f = parseFlow(R"([{"route": ["a"], "startTime": 7, "endTime": 7, "interval": 1}])");
        CHECK(f.vehicleCount() == 1);
        auto v = f.expand();
        REQUIRE(v.size() == 1);
        CHECK(v[0].spawnTime == 7.0);
    }

    TEST_CASE("invalid flow entries are rejected") {
        CHECK_THROWS_AS(parseFlow("{}"), ParseError);
        CHECK_THROWS_AS(parseFlow(R"([{"route": ["a"], "startTime": 0, "endTime": 5, "interval": 0}])"), ParseError);
        CHECK_THROWS_AS(parseFlow(R"([{"route": ["a"], "startTime": 9, "endTime": 5, "interval": 1}])"), ParseError);
        CHECK_THROWS_AS(parseFlow(R"([{"startTime": 0, "endTime": 5, "interval": 1}])"), ParseError);
    }

    TEST_CASE("routes through missing roads or impossible turns are a RouteError") {
        RoadNetwork net = loadRoadnet(TSC_FIXTURES "/mini_roadnet.json");
        CHECK_THROWS_AS(validateFlow(testing::singleVehicle({"in_W", "nowhere"}), net), RouteError);
        CHECK_THROWS_AS(validateFlow(testing::singleVehicle({"in_S", "out_S"}), net), RouteError);
        CHECK_THROWS_AS(validateFlow(testing::singleVehicle({}), net), RouteError);
    }

    TEST_CASE("vehicle count property holds for random flow entries") {
        std::mt19937_64 rng(11);
        std::uniform_real_distribution<double> start(0, 500), len(0, 900), interval(0.5, 30);
        for (int trial = 0; trial < 200; trial++) {
            FlowSpec f;
            int entries = 1 + trial % 5;
            for (int e = 0; e < entries; e++) {
                double s = std::floor(start(rng));
                f.entries.push_back({{"a"}, s, s + std::floor(len(rng)), std::round(interval(rng) * 2) / 2, 10.0});
            }
            CHECK(f.vehicleCount() == closedFormCount(f));
            auto v = f.expand();
            CHECK(v.size() == closedFormCount(f));
            CHECK(std::is_sorted(v.begin(), v.end(),
                                 [](const auto &a, const auto &b) { return a.spawnTime < b.spawnTime; }));
        }
    }

    TEST_CASE("synthetic flows are seeded and valid") {
        RoadNetwork net = synthGrid(2, 2, 300.0);
        SynthFlowOptions o;
        o.seed = 5;
        FlowSpec a = synthFlow(net, o), b = synthFlow(net, o);
        CHECK(a.entries == b.entries);
        validateFlow(a, net);
        o.seed = 6;
        CHECK_FALSE(synthFlow(net, o).entries == a.entries);
        CHECK(a.vehicleCount() > 0);
    }
}
