#include "doctest_tsc.h"

#include "tsc/errors.h"
#include "tsc/observe.h"
#include "tsc/simcore.h"

#include "scenarios.h"

#include <set>

using namespace tsc;

namespace {

    std::shared_ptr<const RoadNetwork> grid11() { return std::make_shared<RoadNetwork>(synthGrid(1, 1, 300.0)); }

    const std::vector<std::string> kEastbound = {"road_0_1_0", "road_1_1_0"};

    FlowSpec queueAndStragglers() {
        FlowSpec f;
        for (int i = 0; i < 3; i++)
            f.entries.push_back({kEastbound, double(i), double(i), 1.0, 100.0 / 9.0});
        for (int i = 0; i < 2; i++)
            f.entries.push_back({kEastbound, 58.0 + i, 58.0 + i, 1.0, 100.0 / 9.0});
        return f;
    }

}

TEST_SUITE("observe") {
    TEST_CASE("three stopped vehicles and two far approaching ones") {
        SimConfig cfg;
        auto net = grid11();
        SimState s = initialState(net, queueAndStragglers());
        while (s.time < 60)
            advance(s, cfg);
        LaneObservation lo = observeLane(s, cfg, *net->findLane("road_0_1_0/through"));
        CHECK(lo.queued == 3);
        CHECK(lo.approaching == std::vector<int>{0, 0, 2});
        IntersectionObservation obs = observe(s, cfg, 0);
        CHECK(obs.phase(PhaseId::ETWT).queuedTotal() == 3);
        CHECK(obs.phase(PhaseId::ETWT).segmentTotal(3) == 2);
        CHECK(obs.totalQueued() == 3);
        CHECK(obs.phase(PhaseId::ETWT).downstreamQueued == 0);
    }

    TEST_CASE("segment boundaries belong to the segment nearer the stop line") {
        SimConfig cfg;
        auto net = grid11();
        SimState s = initialState(net, queueAndStragglers());
        while (s.time < 3)
            advance(s, cfg);
        const int lane = *net->findLane("road_0_1_0/through");
        REQUIRE(s.lanes[lane].vehicles.size() == 3);
        auto place = [&](std::vector<double> positions) {
            for (std::size_t k = 0; k < positions.size(); k++) {
                auto &v = s.vehicles[s.lanes[lane].vehicles[k]];
                v.lanePosition = positions[k];
                v.speed = 5.0;
            }
            return observeLane(s, cfg, lane).approaching;
        };
        CHECK(place({300.0, 200.0, 100.0}) == std::vector<int>{2, 1, 0});
        CHECK(place({200.0 + 1e-6, 100.0 - 1e-6, 0.0}) == std::vector<int>{1, 0, 2});
        CHECK(place({299.0, 150.0, 50.0}) == std::vector<int>{1, 1, 1});
    }

    TEST_CASE("the four phases partition the controlled lanes") {
        SimConfig cfg;
        auto net = std::make_shared<RoadNetwork>(synthGrid(2, 2, 300.0));
        SimState s = initialState(net, FlowSpec{});
        for (int i = 0; i < 4; i++) {
            IntersectionObservation obs = observe(s, cfg, i);
            CHECK(obs.intersection == net->intersections()[i].id);
            std::set<std::string> seen;
            for (const auto &p : obs.phases)
                for (const auto &l : p.lanes)
                    CHECK(seen.insert(l.laneId).second);
            CHECK(seen.size() == 8);
            CHECK(obs.segmentCount() == 3);
        }
    }

    TEST_CASE("queues only grow while every signal stays red") {
        SimConfig cfg;
        auto net = std::make_shared<RoadNetwork>(synthGrid(1, 2, 300.0));
        SynthFlowOptions fo;
        fo.defaultRate = 0.2;
        fo.seed = 4;
        SimState s = initialState(net, synthFlow(*net, fo));
        std::vector<int> last(net->lanes().size(), 0);
        for (int k = 0; k < 400; k++) {
            advance(s, cfg);
            for (std::size_t l = 0; l < last.size(); l++) {
                if (!net->lanes()[l].controlled)
                    continue;
                int q = observeLane(s, cfg, int(l)).queued;
                CHECK(q >= last[l]);
                last[l] = q;
            }
        }
    }

    TEST_CASE("reference observation totals") {
        auto obs = testing::referenceObservation();
        CHECK(obs.phase(PhaseId::ETWT).queuedTotal() == 5);
        CHECK(obs.phase(PhaseId::NTST).queuedTotal() == 2);
        CHECK(obs.phase(PhaseId::ELWL).queuedTotal() == 0);
        CHECK(obs.phase(PhaseId::NLSL).queuedTotal() == 7);
        CHECK(obs.phase(PhaseId::ETWT).segmentTotal(3) == 3);
        CHECK(obs.phase(PhaseId::NTST).approachingTotal() == 7);
        CHECK(obs.totalQueued() == 14);
    }

    TEST_CASE("empty observation is zero-filled") {
        auto obs = emptyObservation(5);
        CHECK(obs.segmentCount() == 5);
        CHECK(obs.totalQueued() == 0);
        for (const auto &p : obs.phases)
            CHECK(p.approachingTotal() == 0);
    }
}
