#include "doctest_tsc.h"

#include "tsc/agents.h"
#include "tsc/critic.h"
#include "tsc/episode.h"
#include "tsc/errors.h"
#include "tsc/reasoning_record.h"

#include "scenarios.h"

#include <cmath>
#include <filesystem>
#include <map>
#include <random>
#include <set>

using namespace tsc;

namespace {

    Features randomFeatures(std::mt19937_64 &rng, double hi) {
        std::uniform_real_distribution<double> u(0.0, hi);
        Features f;
        for (double &x : f)
            x = std::round(u(rng));
        return f;
    }

    double normwiseError(const std::vector<double> &a, const std::vector<double> &b) {
        double diff = 0, na = 0, nb = 0;
        for (std::size_t i = 0; i < a.size(); i++) {
            diff += (a[i] - b[i]) * (a[i] - b[i]);
            na += a[i] * a[i];
            nb += b[i] * b[i];
        }
        double scale = std::max(std::sqrt(na), std::sqrt(nb));
        return scale == 0 ? 0 : std::sqrt(diff) / scale;
    }

    ReasoningRecord recordWith(const Features &f, PhaseId action, bool fallback = false) {
        ReasoningRecord r;
        r.intersection = "intersection_1_1";
        r.features = f;
        r.action = action;
        r.fallback = fallback;
        r.response = "<signal>" + std::string(toString(action)) + "</signal>";
        return r;
    }

    // Brute-force argmax membership, independent of filterTrajectories.
    bool oracleKeeps(const CriticParams &p, const ReasoningRecord &r) {
        if (r.fallback)
            return false;
        auto q = forward(p, r.features);
        double best = q[0];
        for (double v : q)
            best = std::max(best, v);
        return q[phaseIndex(r.action)] >= best;
    }

    TrainConfig smallConfig(std::uint64_t seed, double gamma, int steps, std::size_t batch) {
        TrainConfig c;
        c.seed = seed;
        c.gamma = gamma;
        c.steps = steps;
        c.batchSize = batch;
        return c;
    }

}

TEST_SUITE("critic") {
    TEST_CASE("features follow the ETWT, ELWL, NTST, NLSL layout") {
        Features f = featurize(testing::referenceObservation());
        CHECK(f[0] == 5);
        CHECK(f[4] == 0);
        CHECK(f[8] == 2);
        CHECK(f[12] == 7);
        // ETWT segments 1..3 are (0+0, 0+2, 2+1)
        CHECK(f[1] == 0);
        CHECK(f[2] == 2);
        CHECK(f[3] == 3);
        Features zero{};
        CHECK(featurize(emptyObservation(3)) == zero);
        CHECK_THROWS_AS(featurize(emptyObservation(4)), ShapeError);
    }

    TEST_CASE("zero weights give zero outputs") {
        std::mt19937_64 rng(1);
        auto p = CriticParams::zeros();
        CHECK(p.parameterCount() == 16 * 20 + 20 + 20 * 20 + 20 + 20 * 4 + 4);
        auto q = forward(p, randomFeatures(rng, 50));
        CHECK(q == ActionValues{0, 0, 0, 0});
        CHECK(score(p, randomFeatures(rng, 50), PhaseId::NTST) == 0.0);
    }

    TEST_CASE("single-path weights give the hand-computed output") {
        auto p = CriticParams::zeros();
        p.layers[0].weights[0 * 16 + 0] = 1.0;  // h1[0] = x[0]
        p.layers[0].bias[1] = -5.0;             // h1[1] = relu(-5) = 0
        p.layers[1].weights[0 * 20 + 0] = 2.0;  // h2[0] = 2 h1[0] + 1
        p.layers[1].weights[0 * 20 + 1] = 7.0;
        p.layers[1].bias[0] = 1.0;
        p.layers[2].weights[1 * 20 + 0] = 3.0;  // q[1] = 3 h2[0] - 0.5
        p.layers[2].bias[1] = -0.5;
        p.layers[2].bias[3] = 2.0;
        Features x{};
        x[0] = 4.0;
        auto q = forward(p, x);
        CHECK(q[0] == 0.0);
        CHECK(q[1] == doctest::Approx(3.0 * (2.0 * 4.0 + 1.0) - 0.5));
        CHECK(q[2] == 0.0);
        CHECK(q[3] == 2.0);
        CHECK(score(p, x, PhaseId::ELWL) == q[1]);
        CHECK(greedyAction(q) == PhaseId::ELWL);
        CHECK(greedyAction(ActionValues{1, 2, 2, 0}) == PhaseId::ELWL);
    }

    TEST_CASE("outputs stay finite on large counts") {
        std::mt19937_64 rng(2);
        for (std::uint64_t seed = 0; seed < 20; seed++) {
            auto p = CriticParams::randomInit(seed);
            for (int k = 0; k < 20; k++)
                for (double v : forward(p, randomFeatures(rng, 100)))
                    CHECK(std::isfinite(v));
        }
    }

    TEST_CASE("shape errors") {
        auto p = CriticParams::zeros();
        std::vector<double> shortInput(15, 0.0);
        CHECK_THROWS_AS(forward(p, shortInput), ShapeError);
        std::vector<double> wrong(p.parameterCount() - 1, 0.0);
        CHECK_THROWS_AS(p.assign(wrong), ShapeError);
        p.layers[1].bias.pop_back();
        CHECK_THROWS_AS(p.validate(), ShapeError);
        CHECK_THROWS_AS(tdLoss(CriticParams::zeros(), CriticParams::zeros(), {}, 0.8), ShapeError);
    }

    TEST_CASE("TD loss examples") {
        Transition t;
        t.reward = -3.0;
        auto zero = CriticParams::zeros();
        CHECK(tdLoss(zero, zero, std::span(&t, 1), 0.8).loss == doctest::Approx(9.0));

        std::mt19937_64 rng(3);
        auto p = CriticParams::randomInit(4), target = CriticParams::randomInit(5);
        std::vector<Transition> batch(10);
        double expected = 0;
        for (auto &tr : batch) {
            tr.obs = randomFeatures(rng, 10);
            tr.next = randomFeatures(rng, 10);
            tr.action = static_cast<int>(rng() % 4);
            tr.reward = -double(rng() % 20);
            double e = tr.reward - forward(p, tr.obs)[tr.action];
            expected += e * e;
        }
        CHECK(tdLoss(p, target, batch, 0.0).loss == doctest::Approx(expected / 10));

        // Terminal transitions do not bootstrap.
        Transition term = batch[0];
        term.terminal = true;
        double e = term.reward - forward(p, term.obs)[term.action];
        CHECK(tdLoss(p, target, std::span(&term, 1), 0.9).loss == doctest::Approx(e * e));
        Transition boot = batch[0];
        auto qn = forward(target, boot.next);
        double y = boot.reward + 0.9 * *std::max_element(qn.begin(), qn.end());
        double e2 = y - forward(p, boot.obs)[boot.action];
        CHECK(tdLoss(p, target, std::span(&boot, 1), 0.9).loss == doctest::Approx(e2 * e2));
    }

    TEST_CASE("TD gradient agrees with central differences on 100 random nets") {
        std::mt19937_64 rng(6);
        std::uniform_real_distribution<double> gammaDist(0.0, 1.0);
        int worstConfig = -1;
        double worst = 0;
        for (int config = 0; config < 100; config++) {
            auto p = CriticParams::randomInit(1000 + config), target = CriticParams::randomInit(2000 + config);
            std::vector<Transition> batch(4);
            for (auto &tr : batch) {
                tr.obs = randomFeatures(rng, 6);
                tr.next = randomFeatures(rng, 6);
                tr.action = static_cast<int>(rng() % 4);
                tr.reward = -double(rng() % 10);
                tr.terminal = rng() % 5 == 0;
            }
            double gamma = gammaDist(rng);
            auto analytic = tdLoss(p, target, batch, gamma).gradient.flatten();
            auto theta = p.flatten();
            std::vector<double> numeric(theta.size());
            const double h = 1e-6;
            for (std::size_t i = 0; i < theta.size(); i++) {
                auto plus = theta, minus = theta;
                plus[i] += h;
                minus[i] -= h;
                CriticParams pp = p, pm = p;
                pp.assign(plus);
                pm.assign(minus);
                numeric[i] = (tdLoss(pp, target, batch, gamma).loss - tdLoss(pm, target, batch, gamma).loss) / (2 * h);
            }
            double err = normwiseError(analytic, numeric);
            if (err > worst) {
                worst = err;
                worstConfig = config;
            }
        }
        INFO("worst config " << worstConfig);
        CHECK(worst <= 1e-4);
    }

    TEST_CASE("critic learns to serve the dominant queue") {
        // Phase `dom` always has the longest queue; serving phase a clears its queue.
        std::mt19937_64 rng(7);
        std::uniform_int_distribution<int> small(0, 6), big(10, 20);
        const int dom = 2;
        auto state = [&] {
            Features f{};
            for (int p = 0; p < 4; p++) {
                f[4 * p] = p == dom ? big(rng) : small(rng);
                for (int s = 1; s < 4; s++)
                    f[4 * p + s] = small(rng);
            }
            return f;
        };
        std::vector<Transition> data;
        for (int i = 0; i < 2000; i++) {
            Transition t;
            t.obs = state();
            t.action = i % 4;
            double total = t.obs[0] + t.obs[4] + t.obs[8] + t.obs[12];
            t.reward = -(total - t.obs[4 * t.action]);
            t.next = state();
            data.push_back(t);
        }
        auto result = trainCritic(data, smallConfig(1, 0.8, 3000, 256));
        int hits = 0;
        for (int i = 0; i < 500; i++)
            hits += greedyAction(forward(result.params, state())) == phaseAt(dom);
        CHECK(hits >= 475);
        CHECK(result.losses.size() == 3000);
        CHECK(result.losses.back() < result.losses.front());
    }

    TEST_CASE("with gamma 0 the critic regresses to mean rewards of a bandit") {
        const double means[2][4] = {{-1, -3, -2, -4}, {-5, -1, -2, -3}};
        Features s[2]{};
        s[0][0] = 1;
        s[1][4] = 1;
        std::mt19937_64 rng(8);
        std::uniform_real_distribution<double> noise(-1, 1);
        std::vector<Transition> data;
        for (int i = 0; i < 4000; i++) {
            Transition t;
            int st = i % 2;
            t.obs = s[st];
            t.action = (i / 2) % 4;
            t.reward = means[st][t.action] + noise(rng);
            t.terminal = true;
            data.push_back(t);
        }
        auto cfg = smallConfig(2, 0.0, 3000, 512);
        cfg.learningRate = 3e-3;
        auto result = trainCritic(data, cfg);
        for (int st = 0; st < 2; st++) {
            auto q = forward(result.params, s[st]);
            for (int a = 0; a < 4; a++)
                CHECK(std::abs(q[a] - means[st][a]) <= 0.15);
        }
    }

    TEST_CASE("training on nothing is a no-op and training is deterministic") {
        auto init = CriticParams::randomInit(3);
        CHECK(trainCritic({}, smallConfig(0, 0.8, 50, 16), init).params == init);

        std::mt19937_64 rng(9);
        std::vector<Transition> data(300);
        for (auto &t : data) {
            t.obs = randomFeatures(rng, 10);
            t.next = randomFeatures(rng, 10);
            t.action = static_cast<int>(rng() % 4);
            t.reward = -double(rng() % 10);
        }
        auto a = trainCritic(data, smallConfig(5, 0.8, 200, 64));
        auto b = trainCritic(data, smallConfig(5, 0.8, 200, 64));
        auto c = trainCritic(data, smallConfig(6, 0.8, 200, 64));
        CHECK(criticHash(a.params) == criticHash(b.params));
        CHECK(a.losses == b.losses);
        CHECK(criticHash(a.params) != criticHash(c.params));
    }

    TEST_CASE("blow-up raises DivergenceError") {
        Transition t;
        t.reward = -1e6;
        t.terminal = true;
        std::vector<Transition> data(10, t);
        CHECK_THROWS_AS(trainCritic(data, smallConfig(0, 0.8, 5, 10)), DivergenceError);
    }

    TEST_CASE("replay buffer is a bounded ring with sampling without replacement") {
        ReplayBuffer buf(5);
        for (int i = 0; i < 8; i++) {
            Transition t;
            t.reward = -i;
            buf.push(t);
        }
        CHECK(buf.size() == 5);
        std::mt19937_64 rng(1);
        auto all = buf.sample(10, rng);
        CHECK(all.size() == 5);
        std::set<double> rewards;
        for (const auto &t : all)
            rewards.insert(t.reward);
        CHECK(rewards == std::set<double>{-3, -4, -5, -6, -7});
        auto some = buf.sample(3, rng);
        std::set<double> distinct;
        for (const auto &t : some)
            distinct.insert(t.reward);
        CHECK(distinct.size() == 3);
    }

    TEST_CASE("train config validation and JSON") {
        auto c = TrainConfig::fromJson({{"gamma", 0.5}, {"steps", 10}});
        CHECK(c.gamma == 0.5);
        CHECK(TrainConfig::fromJson(c.toJson()).toJson() == c.toJson());
        CHECK_THROWS_AS(TrainConfig::fromJson({{"gamma", 1.5}}), ConfigError);
        CHECK_THROWS_AS(TrainConfig::fromJson({{"learning_rate", 0}}), ConfigError);
        TrainConfig d;
        CHECK(d.learningRate == 1e-3);
        CHECK(d.bufferCapacity == 12000);
        CHECK(d.batchSize == 3000);
    }

    TEST_CASE("transitions pair consecutive decisions of each intersection") {
        SimConfig cfg;
        cfg.episodeLength = 700;
        auto net = std::make_shared<RoadNetwork>(synthGrid(1, 2, 300.0));
        SynthFlowOptions fo;
        fo.defaultRate = 0.1;
        auto ft = makeFixedTimeController();
        auto log = runEpisode(net, synthFlow(*net, fo), *ft, cfg);
        auto ts = transitionsFromLog(log);
        CHECK(ts.size() == log.switches.size() - 2);
        std::map<std::string, std::vector<const SwitchRecord *>> by;
        for (const auto &s : log.switches)
            by[s.intersection].push_back(&s);
        std::size_t k = 0;
        for (const auto &[id, list] : by)
            for (std::size_t i = 0; i + 1 < list.size(); i++, k++) {
                CHECK(ts[k].obs == featurize(list[i]->observation));
                CHECK(ts[k].next == featurize(list[i + 1]->observation));
                CHECK(ts[k].action == phaseIndex(list[i]->phase));
                CHECK(ts[k].reward == -list[i + 1]->observation.totalQueued());
                CHECK(ts[k].reward <= 0);
            }
    }

    TEST_CASE("critic controller acts greedily") {
        auto p = CriticParams::zeros();
        p.layers[2].bias = {0, 0, 1, 0};
        auto c = makeCriticController(p);
        CHECK(c->decide(testing::referenceObservation(), 0) == PhaseId::NTST);
        auto explore = makeExplorationController(p, 0.0, 1);
        CHECK(explore->decide(testing::referenceObservation(), 0) == PhaseId::NTST);
        auto all = makeExplorationController(p, 1.0, 1);
        std::set<PhaseId> seen;
        for (int i = 0; i < 200; i++)
            seen.insert(all->decide(testing::referenceObservation(), i));
        CHECK(seen.size() == 4);
    }

    TEST_CASE("filter keeps argmax records, ties included") {
        std::mt19937_64 rng(10);
        auto zero = CriticParams::zeros();
        std::vector<ReasoningRecord> recs;
        for (int i = 0; i < 40; i++)
            recs.push_back(recordWith(randomFeatures(rng, 10), phaseAt(i % 4), i % 10 == 9));
        auto kept = filterTrajectories(recs, zero);
        CHECK(kept.size() == 36);  // only fallback records go

        auto prefer = CriticParams::zeros();
        prefer.layers[2].bias = {0, 1, 0, 0};
        auto only = filterTrajectories(recs, prefer);
        for (const auto &r : only)
            CHECK(r.action == PhaseId::ELWL);
        CHECK(only.size() == 8);
    }

    TEST_CASE("filter matches a brute-force oracle and is idempotent") {
        std::mt19937_64 rng(11);
        for (std::uint64_t seed = 0; seed < 5; seed++) {
            auto p = CriticParams::randomInit(seed);
            std::vector<ReasoningRecord> recs;
            for (int i = 0; i < 1000; i++)
                recs.push_back(recordWith(randomFeatures(rng, 15), phaseAt(rng() % 4), rng() % 50 == 0));
            auto kept = filterTrajectories(recs, p);
            std::vector<ReasoningRecord> oracle;
            for (const auto &r : recs)
                if (oracleKeeps(p, r))
                    oracle.push_back(r);
            CHECK(kept == oracle);
            CHECK(filterTrajectories(kept, p) == kept);

            auto shifted = p;
            for (double &b : shifted.layers[2].bias)
                b += 17.25;
            CHECK(filterTrajectories(recs, shifted) == kept);
        }
    }

    TEST_CASE("weights round-trip through JSON and files") {
        auto p = CriticParams::randomInit(12);
        CHECK(criticFromJson(criticToJson(p)) == p);
        auto path = std::filesystem::temp_directory_path() / ("tsc_critic_" + std::to_string(::getpid()) + ".json");
        saveCritic(p, path);
        CHECK(loadCritic(path) == p);
        CHECK(criticHash(loadCritic(path)) == criticHash(p));
        std::filesystem::remove(path);
        Json broken = criticToJson(p);
        broken["layers"][1]["bias"].erase(0);
        CHECK_THROWS_AS(criticFromJson(broken), ShapeError);
        CHECK_THROWS_AS(criticFromJson(Json::object()), ParseError);
        CHECK(lossCurveCsv({2.5, 1.0}).rfind("step,loss\n", 0) == 0);
    }
}
