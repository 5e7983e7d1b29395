#include "doctest_tsc.h"

#include "tsc/errors.h"
#include "tsc/finetune.h"
#include "tsc/reasoning_record.h"
#include "tsc/util.h"

#include "scenarios.h"

#include <cmath>
#include <filesystem>
#include <random>

using namespace tsc;

namespace {

    // Direct transcription of the ranking loss, written without any shared code.
    double oracleRbc(const std::vector<double> &p, const std::vector<double> &q, double beta) {
        const std::size_t k = p.size();
        double s = 0;
        for (std::size_t i = 0; i < k; i++)
            for (std::size_t j = 0; j < k; j++) {
                if (!(q[i] > q[j]))
                    continue;
                double pStar = INFINITY;
                for (std::size_t m = 0; m < k; m++)
                    if (q[m] > q[j])
                        pStar = std::min(pStar, p[m]);
                s += std::exp(p[j] - p[i]) + std::exp(2 * pStar - 2 * beta - p[i] - p[j]);
            }
        return std::log(1 + s);
    }

    RankingBatch batchOf(const std::vector<double> &p, const std::vector<double> &q, double beta) {
        RankingBatch b;
        b.group = "g";
        b.beta = beta;
        for (std::size_t i = 0; i < p.size(); i++)
            b.entries.push_back({"t" + std::to_string(i), p[i], q[i]});
        return b;
    }

    std::filesystem::path tempPath(const std::string &name) {
        return std::filesystem::temp_directory_path() / ("tsc_ft_" + std::to_string(::getpid()) + "_" + name);
    }

    ReasoningRecord record(const std::string &prompt, PhaseId a, int sample, double t = 30) {
        ReasoningRecord r;
        r.time = t;
        r.intersection = "intersection_1_1";
        r.prompt = prompt;
        r.response = "thinking\n<signal>" + std::string(toString(a)) + "</signal>";
        r.action = a;
        r.features = featurize(testing::referenceObservation());
        r.source = "stub";
        r.group = "intersection_1_1@" + std::to_string(t);
        r.sample = sample;
        return r;
    }

}

TEST_SUITE("finetune") {
    TEST_CASE("token likelihood helpers") {
        CHECK(iftNll(std::vector<double>{0, 0, 0}) == 0.0);
        CHECK(iftNll(std::vector<double>{-1, -2, -3}) == doctest::Approx(6.0));
        CHECK(tokenAvgLogLik(std::vector<double>{-2, -4}) == doctest::Approx(-3.0));
        CHECK(tokenAvgLogLik(std::vector<double>{-0.5}) == -0.5);
        std::vector<double> uniform(7, -0.3);
        CHECK(iftNll(uniform) == doctest::Approx(7 * 0.3));
        std::mt19937_64 rng(1);
        std::uniform_real_distribution<double> u(-5, 0);
        for (int n = 1; n < 30; n++) {
            std::vector<double> t(n);
            for (double &x : t)
                x = u(rng);
            CHECK(iftNll(t) == doctest::Approx(-n * tokenAvgLogLik(t)));
        }
        CHECK_THROWS_AS(iftNll(std::vector<double>{}), EmptySequence);
        CHECK_THROWS_AS(tokenAvgLogLik(std::vector<double>{}), EmptySequence);
    }

    TEST_CASE("ranking loss fixtures") {
        auto single = rbcLoss(batchOf({-1.0}, {3.0}, 1.0));
        CHECK(single.loss == 0.0);
        CHECK(single.pairs == 0);
        CHECK(single.gradient == std::vector<double>{0.0});
        auto two = rbcLoss(batchOf({-0.7, -0.7}, {2.0, 1.0}, 0.0));
        CHECK(two.loss == doctest::Approx(std::log(3.0)));
        CHECK(two.pairs == 1);
        auto ties = rbcLoss(batchOf({-1, -2, -3}, {1, 1, 1}, 1.0));
        CHECK(ties.loss == 0.0);
        CHECK(ties.pairs == 0);
    }

    TEST_CASE("ranking loss matches the oracle and its gradient matches differences") {
        std::mt19937_64 rng(2);
        std::uniform_real_distribution<double> pd(-3, 0), bd(0, 2);
        std::uniform_int_distribution<int> qd(0, 3);
        double worst = 0;
        for (int k : {2, 3, 4}) {
            for (int trial = 0; trial < 100; trial++) {
                std::vector<double> p(k), q(k);
                for (int i = 0; i < k; i++) {
                    p[i] = pd(rng);
                    q[i] = qd(rng);
                }
                double beta = bd(rng);
                auto r = rbcLoss(batchOf(p, q, beta));
                CHECK(r.loss == doctest::Approx(oracleRbc(p, q, beta)).epsilon(1e-12));
                CHECK(r.loss >= 0.0);
                const double h = 1e-6;
                for (int i = 0; i < k; i++) {
                    auto plus = p, minus = p;
                    plus[i] += h;
                    minus[i] -= h;
                    double fd = (oracleRbc(plus, q, beta) - oracleRbc(minus, q, beta)) / (2 * h);
                    double err = std::abs(fd - r.gradient[i]) / std::max(1.0, std::abs(fd));
                    worst = std::max(worst, err);
                }
            }
        }
        CHECK(worst <= 1e-5);
    }

    TEST_CASE("loss is zero exactly when there are no ordered pairs") {
        std::mt19937_64 rng(3);
        std::uniform_real_distribution<double> pd(-3, 0);
        for (int trial = 0; trial < 200; trial++) {
            int k = 1 + trial % 4;
            std::vector<double> p(k), q(k);
            for (int i = 0; i < k; i++) {
                p[i] = pd(rng);
                q[i] = trial % 3 == 0 ? 1.0 : double(rng() % 3);
            }
            auto r = rbcLoss(batchOf(p, q, 1.0));
            CHECK((r.loss == 0.0) == (r.pairs == 0));
        }
    }

    TEST_CASE("only the order of q matters") {
        std::mt19937_64 rng(4);
        std::uniform_real_distribution<double> pd(-3, 0), qd(-10, 10);
        for (int trial = 0; trial < 100; trial++) {
            std::vector<double> p(4), q(4), shifted(4);
            for (int i = 0; i < 4; i++) {
                p[i] = pd(rng);
                q[i] = qd(rng);
                shifted[i] = q[i] + 42.0;
            }
            CHECK(rbcLoss(batchOf(p, q, 1.0)).loss == doctest::Approx(rbcLoss(batchOf(p, shifted, 1.0)).loss));
        }
    }

    TEST_CASE("raising the likelihood of the best-scored trajectory lowers the loss") {
        std::vector<double> q = {3, 1, 2, 0};
        std::vector<double> p = {-2, -1, -1.5, -1.2};
        auto r = rbcLoss(batchOf(p, q, 1.0));
        CHECK(r.gradient[0] < 0.0);
        CHECK(r.gradient[3] > 0.0);
        double last = r.loss;
        for (int step = 0; step < 10; step++) {
            p[0] += 0.2;
            double now = rbcLoss(batchOf(p, q, 1.0)).loss;
            CHECK(now < last);
            last = now;
        }
    }

    TEST_CASE("ranking batches group trajectories by prompt") {
        std::vector<ReasoningRecord> recs;
        for (int i = 0; i < 4; i++)
            recs.push_back(record("prompt A", phaseAt(i), i));
        recs.push_back(record("prompt B", PhaseId::NLSL, 0, 60));
        auto fb = record("prompt A", PhaseId::ETWT, 4);
        fb.fallback = true;
        recs.push_back(fb);

        std::map<std::string, TokenLogProbs> lp;
        for (const auto &r : recs)
            lp[trajectoryId(r)] = {-0.1 * (r.sample + 1), -0.2};
        LogProbSource source = [&](const ReasoningRecord &r) -> std::optional<TokenLogProbs> {
            auto it = lp.find(trajectoryId(r));
            if (it == lp.end())
                return std::nullopt;
            return it->second;
        };
        auto critic = CriticParams::randomInit(5);
        auto batches = buildRankingBatches(recs, critic, source, 0.5);
        REQUIRE(batches.size() == 2);
        CHECK(batches[0].entries.size() == 4);
        CHECK(batches[0].beta == 0.5);
        CHECK(batches[1].entries.size() == 1);
        CHECK(rbcLoss(batches[1]).loss == 0.0);
        for (int i = 0; i < 4; i++) {
            CHECK(batches[0].entries[i].trajectory == trajectoryId(recs[i]));
            CHECK(batches[0].entries[i].q == score(critic, recs[i].features, recs[i].action));
            CHECK(batches[0].entries[i].p == doctest::Approx(tokenAvgLogLik(lp[trajectoryId(recs[i])])));
        }
        CHECK(trajectoryId(recs[2]) == "intersection_1_1@30#2");

        // All four share the same observation; a zero critic gives equal q and no pairs.
        auto flat = buildRankingBatches(recs, CriticParams::zeros(), source);
        CHECK(rbcLoss(flat[0]).pairs == 0);

        lp.erase(trajectoryId(recs[1]));
        CHECK_THROWS_AS(buildRankingBatches(recs, critic, source), MissingLogProbs);
    }

    TEST_CASE("log-prob and batch files round-trip") {
        auto lpPath = tempPath("lp.jsonl");
        writeFile(lpPath, "{\"trajectory\": \"a@0#0\", \"logprobs\": [-1, -0.5]}\n\n{\"trajectory\": \"b@0#1\", "
                          "\"logprobs\": [-2]}\n");
        auto lp = loadLogProbs(lpPath);
        CHECK(lp.size() == 2);
        CHECK(lp["a@0#0"] == TokenLogProbs{-1, -0.5});
        writeFile(lpPath, "{\"trajectory\": \"a\"}\n");
        CHECK_THROWS_AS(loadLogProbs(lpPath), ParseError);
        std::filesystem::remove(lpPath);

        std::vector<RankingBatch> batches = {batchOf({-1, -2}, {1, 0}, 1.0), batchOf({-0.5}, {2}, 0.3)};
        auto path = tempPath("batches.jsonl");
        saveRankingBatches(batches, path);
        CHECK(loadRankingBatches(path) == batches);
        writeFile(path, toJson(batches[0]).dump() + "\n{\"group\": 3}\n");
        try {
            loadRankingBatches(path);
            FAIL("expected a ParseError");
        } catch (const ParseError &e) {
            CHECK(std::string(e.what()).find("line 2") != std::string::npos);
        }
        std::filesystem::remove(path);
    }

    TEST_CASE("instruction dataset export and import") {
        std::vector<ReasoningRecord> recs = {record("prompt A", PhaseId::NTST, 0), record("prompt B", PhaseId::ETWT, 1, 65)};
        auto path = tempPath("ift.jsonl");
        CHECK(exportIftDataset(recs, path) == 2);
        auto lines = readLines(path);
        REQUIRE(lines.size() == 2);
        Json first = Json::parse(lines[0]);
        CHECK(first["instruction"] == "prompt A");
        CHECK(first["response"] == recs[0].response);
        CHECK(first["meta"]["action"] == "NTST");
        CHECK(first["meta"]["t"] == 30.0);
        CHECK(lines[0].find("\"instruction\"") < lines[0].find("\"response\""));
        CHECK(lines[0].find("\"response\"") < lines[0].find("\"meta\""));
        auto back = importIftDataset(path);
        REQUIRE(back.size() == 2);
        for (std::size_t i = 0; i < 2; i++) {
            CHECK(back[i].prompt == recs[i].prompt);
            CHECK(back[i].response == recs[i].response);
            CHECK(back[i].action == recs[i].action);
            CHECK(back[i].features == recs[i].features);
            CHECK(back[i].time == recs[i].time);
        }

        CHECK(exportIftDataset({}, path) == 0);
        CHECK(readFile(path).empty());

        auto bad = recs;
        bad[1].response = "no tag at all";
        CHECK_THROWS_AS(exportIftDataset(bad, path), ParseError);
        bad[1].response = "<signal>NLSL</signal>";
        CHECK_THROWS_AS(exportIftDataset(bad, path), ParseError);
        std::filesystem::remove(path);
    }

    TEST_CASE("reasoning records round-trip") {
        std::vector<ReasoningRecord> recs = {record("p\nq", PhaseId::ELWL, 0), record("r", PhaseId::NLSL, 3, 99)};
        recs[1].fallback = true;
        auto path = tempPath("records.jsonl");
        saveRecords(recs, path);
        CHECK(loadRecords(path) == recs);
        std::filesystem::remove(path);
    }
}
