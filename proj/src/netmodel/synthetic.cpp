#include "tsc/netmodel.h"
#include "tsc/errors.h"

#include <cmath>
#include <random>

namespace tsc {

    namespace {

        std::string nodeId(int c, int r) {
            return "intersection_" + std::to_string(c) + "_" + std::to_string(r);
        }

        // CityFlow grid convention: 0 east, 1 north, 2 west, 3 south.
        constexpr int kDx[4] = {1, 0, -1, 0};
        constexpr int kDy[4] = {0, 1, 0, -1};

        std::string roadId(int c, int r, int dir) {
            return "road_" + std::to_string(c) + "_" + std::to_string(r) + "_" + std::to_string(dir);
        }

    }

    RoadNetwork synthGrid(int rows, int cols, double laneLength) {
        if (rows < 1 || cols < 1)
            throw TopologyError("grid needs at least one row and one column");
        if (!(laneLength > 0.0))
            throw TopologyError("lane length must be positive");

        auto inside = [&](int c, int r) { return c >= 1 && c <= cols && r >= 1 && r <= rows; };
        auto exists = [&](int c, int r) {
            bool corner = (c == 0 || c == cols + 1) && (r == 0 || r == rows + 1);
            return c >= 0 && c <= cols + 1 && r >= 0 && r <= rows + 1 && !corner;
        };

        NetworkDraft draft;
        for (int r = 0; r <= rows + 1; r++) {
            for (int c = 0; c <= cols + 1; c++) {
                if (!exists(c, r))
                    continue;
                draft.nodes.push_back({nodeId(c, r), {c * laneLength, r * laneLength}, !inside(c, r)});
            }
        }
        for (int r = 0; r <= rows + 1; r++) {
            for (int c = 0; c <= cols + 1; c++) {
                if (!exists(c, r))
                    continue;
                for (int d = 0; d < 4; d++) {
                    int nc = c + kDx[d];
                    int nr = r + kDy[d];
                    if (!exists(nc, nr) || (!inside(c, r) && !inside(nc, nr)))
                        continue;
                    draft.roads.push_back({roadId(c, r, d), nodeId(c, r), nodeId(nc, nr),
                                           {{c * laneLength, r * laneLength}, {nc * laneLength, nr * laneLength}}});
                }
            }
        }
        for (int r = 1; r <= rows; r++) {
            for (int c = 1; c <= cols; c++) {
                for (int d = 0; d < 4; d++) {
                    // Incoming road heading `d` starts one step behind.
                    std::string in = roadId(c - kDx[d], r - kDy[d], d);
                    draft.turns.push_back({nodeId(c, r), in, roadId(c, r, d), Movement::Through});
                    draft.turns.push_back({nodeId(c, r), in, roadId(c, r, (d + 1) % 4), Movement::Left});
                    draft.turns.push_back({nodeId(c, r), in, roadId(c, r, (d + 3) % 4), Movement::Right});
                }
            }
        }
        return RoadNetwork(draft);
    }

    FlowSpec synthFlow(const RoadNetwork &network, const SynthFlowOptions &options) {
        if (!(options.duration > 0.0))
            throw ConfigError("flow duration must be positive");
        if (options.leftProbability < 0.0 || options.rightProbability < 0.0 ||
            options.leftProbability + options.rightProbability > 1.0)
            throw ConfigError("turn probabilities must be non-negative and sum to at most 1");

        std::mt19937_64 rng(options.seed);
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        const auto &roads = network.roads();
        const auto &nodes = network.nodes();
        const int maxHops = 4 * static_cast<int>(network.intersections().size()) + 4;

        struct Arrival {
            double time;
            std::vector<std::string> route;
        };
        std::vector<Arrival> arrivals;

        for (std::size_t r = 0; r < roads.size(); r++) {
            if (!nodes[roads[r].from].boundary || nodes[roads[r].to].boundary)
                continue;
            Approach side = network.lanes()[roads[r].lanes.front()].approach;
            double rate = options.defaultRate;
            if (auto it = options.rateByApproach.find(side); it != options.rateByApproach.end())
                rate = it->second;
            if (!(rate > 0.0))
                continue;
            std::exponential_distribution<double> gap(rate);
            double t = gap(rng);
            while (t < options.duration) {
                Arrival a;
                a.time = std::floor(t);
                int cur = static_cast<int>(r);
                a.route.push_back(roads[cur].id);
                int hops = 0;
                while (auto inter = network.intersectionAtEnd(cur)) {
                    double u = unit(rng);
                    Movement m = Movement::Through;
                    if (hops < maxHops) {
                        if (u < options.leftProbability)
                            m = Movement::Left;
                        else if (u < options.leftProbability + options.rightProbability)
                            m = Movement::Right;
                    }
                    int lane = network.intersections()[*inter].lane(
                        network.lanes()[roads[cur].lanes.front()].approach, m);
                    if (lane < 0)
                        lane = network.intersections()[*inter].lane(
                            network.lanes()[roads[cur].lanes.front()].approach, Movement::Through);
                    cur = *network.lanes()[lane].downstreamRoad;
                    a.route.push_back(roads[cur].id);
                    hops++;
                }
                arrivals.push_back(std::move(a));
                t += gap(rng);
            }
        }
        std::stable_sort(arrivals.begin(), arrivals.end(),
                         [](const Arrival &a, const Arrival &b) { return a.time < b.time; });
        FlowSpec flow;
        for (auto &a : arrivals)
            flow.entries.push_back({std::move(a.route), a.time, a.time, 1.0, options.maxSpeed});
        return flow;
    }

}
