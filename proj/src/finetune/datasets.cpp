#include "tsc/errors.h"
#include "tsc/finetune.h"
#include "tsc/util.h"

#include <sstream>

namespace tsc {

    namespace {

        std::string formatTime(double t) {
            std::ostringstream out;
            out.precision(15);
            out << t;
            return out.str();
        }

        Features featuresFromJson(const Json &j, const char *key, const std::string &where) {
            auto values = requireAs<std::vector<double>>(j, key, where);
            if (values.size() != static_cast<std::size_t>(kFeatureDim))
                throw ParseError(where + ": \"" + key + "\" must hold " + std::to_string(kFeatureDim) + " numbers");
            Features f{};
            std::copy(values.begin(), values.end(), f.begin());
            return f;
        }

        template <typename T, typename F>
        std::vector<T> parseJsonLines(const std::filesystem::path &path, F &&parse) {
            std::vector<T> out;
            std::size_t lineNo = 0;
            for (const auto &line : readLines(path)) {
                lineNo++;
                if (trim(line).empty())
                    continue;
                const std::string where = path.string() + " line " + std::to_string(lineNo);
                Json j;
                try {
                    j = Json::parse(line);
                } catch (const nlohmann::json::parse_error &) {
                    throw ParseError(where + ": malformed JSON");
                }
                try {
                    out.push_back(parse(j, where));
                } catch (const ParseError &e) {
                    throw ParseError(where + ": " + e.what());
                }
            }
            return out;
        }

        template <typename T, typename F>
        void writeJsonLines(const std::vector<T> &items, const std::filesystem::path &path, F &&toJsonFn) {
            std::ostringstream out;
            for (const auto &item : items)
                out << toJsonFn(item).dump() << '\n';
            writeFile(path, out.str());
        }

    }

    Json toJson(const ReasoningRecord &r) {
        return {{"t", r.time},
                {"intersection", r.intersection},
                {"prompt", r.prompt},
                {"response", r.response},
                {"action", toString(r.action)},
                {"features", r.features},
                {"source", r.source},
                {"group", r.group},
                {"sample", r.sample},
                {"fallback", r.fallback}};
    }

    ReasoningRecord recordFromJson(const Json &j) {
        const std::string where = "reasoning record";
        ReasoningRecord r;
        r.time = requireAs<double>(j, "t", where);
        r.intersection = requireAs<std::string>(j, "intersection", where);
        r.prompt = requireAs<std::string>(j, "prompt", where);
        r.response = requireAs<std::string>(j, "response", where);
        r.action = phaseFromJson(requireField(j, "action", where), where);
        r.features = featuresFromJson(j, "features", where);
        r.source = requireAs<std::string>(j, "source", where);
        r.group = requireAs<std::string>(j, "group", where);
        r.sample = requireAs<int>(j, "sample", where);
        r.fallback = requireAs<bool>(j, "fallback", where);
        return r;
    }

    void saveRecords(const std::vector<ReasoningRecord> &records, const std::filesystem::path &path) {
        writeJsonLines(records, path, [](const ReasoningRecord &r) { return toJson(r); });
    }

    std::vector<ReasoningRecord> loadRecords(const std::filesystem::path &path) {
        return parseJsonLines<ReasoningRecord>(path, [](const Json &j, const std::string &) {
            return recordFromJson(j);
        });
    }

    std::string trajectoryId(const ReasoningRecord &record) {
        return record.intersection + "@" + formatTime(record.time) + "#" + std::to_string(record.sample);
    }

    std::vector<RankingBatch> buildRankingBatches(const std::vector<ReasoningRecord> &records,
                                                  const CriticParams &critic, const LogProbSource &source,
                                                  double beta) {
        std::vector<RankingBatch> batches;
        std::map<std::string, std::size_t> byPrompt;
        for (const auto &r : records) {
            if (r.fallback)
                continue;
            auto tokens = source(r);
            if (!tokens || tokens->empty())
                throw MissingLogProbs("no token log-probabilities for trajectory " + trajectoryId(r));
            auto [it, inserted] = byPrompt.emplace(r.prompt, batches.size());
            if (inserted) {
                RankingBatch b;
                b.group = r.group.empty() ? trajectoryId(r) : r.group;
                b.beta = beta;
                batches.push_back(std::move(b));
            }
            batches[it->second].entries.push_back(
                {trajectoryId(r), tokenAvgLogLik(*tokens), score(critic, r.features, r.action)});
        }
        return batches;
    }

    std::map<std::string, TokenLogProbs> loadLogProbs(const std::filesystem::path &path) {
        std::map<std::string, TokenLogProbs> out;
        auto rows = parseJsonLines<std::pair<std::string, TokenLogProbs>>(
            path, [](const Json &j, const std::string &where) {
                auto id = requireAs<std::string>(j, "trajectory", where);
                auto lp = requireAs<std::vector<double>>(j, "logprobs", where);
                if (lp.empty())
                    throw ParseError("\"logprobs\" is empty");
                for (double v : lp)
                    if (v > 0.0)
                        throw ParseError("log-probabilities must be <= 0");
                return std::make_pair(id, lp);
            });
        for (auto &[id, lp] : rows)
            out[id] = std::move(lp);
        return out;
    }

    Json toJson(const RankingBatch &batch) {
        Json ids = Json::array(), p = Json::array(), q = Json::array();
        for (const auto &e : batch.entries) {
            ids.push_back(e.trajectory);
            p.push_back(e.p);
            q.push_back(e.q);
        }
        return {{"group", batch.group}, {"trajectories", ids}, {"p", p}, {"q", q}, {"beta", batch.beta}};
    }

    RankingBatch rankingBatchFromJson(const Json &j) {
        const std::string where = "ranking batch";
        RankingBatch b;
        b.group = j.contains("group") ? requireAs<std::string>(j, "group", where) : std::string();
        auto p = requireAs<std::vector<double>>(j, "p", where);
        auto q = requireAs<std::vector<double>>(j, "q", where);
        b.beta = requireAs<double>(j, "beta", where);
        if (p.size() != q.size())
            throw ParseError(where + ": p and q differ in length");
        if (p.empty())
            throw ParseError(where + ": a batch needs at least one trajectory");
        std::vector<std::string> ids;
        if (j.contains("trajectories")) {
            ids = requireAs<std::vector<std::string>>(j, "trajectories", where);
            if (ids.size() != p.size())
                throw ParseError(where + ": trajectories and p differ in length");
        }
        for (std::size_t i = 0; i < p.size(); i++) {
            if (p[i] > 0.0)
                throw ParseError(where + ": p values are log-likelihoods and must be <= 0");
            b.entries.push_back({ids.empty() ? std::to_string(i) : ids[i], p[i], q[i]});
        }
        return b;
    }

    void saveRankingBatches(const std::vector<RankingBatch> &batches, const std::filesystem::path &path) {
        writeJsonLines(batches, path, [](const RankingBatch &b) { return toJson(b); });
    }

    std::vector<RankingBatch> loadRankingBatches(const std::filesystem::path &path) {
        return parseJsonLines<RankingBatch>(path, [](const Json &j, const std::string &) {
            return rankingBatchFromJson(j);
        });
    }

    std::size_t exportIftDataset(const std::vector<ReasoningRecord> &records, const std::filesystem::path &path) {
        std::ostringstream out;
        for (const auto &r : records) {
            auto parsed = parseDecision(r.response);
            if (parsed.status != ParseStatus::Ok || *parsed.phase != r.action)
                throw ParseError("trajectory " + trajectoryId(r) +
                                 " does not end in a signal tag matching its action");
            Json meta = {{"t", r.time},
                         {"intersection", r.intersection},
                         {"action", toString(r.action)},
                         {"source", r.source},
                         {"o_t", r.features},
                         {"group", r.group},
                         {"sample", r.sample}};
            out << Json{{"instruction", r.prompt}, {"response", r.response}, {"meta", meta}}.dump() << '\n';
        }
        writeFile(path, out.str());
        return records.size();
    }

    std::vector<ReasoningRecord> importIftDataset(const std::filesystem::path &path) {
        return parseJsonLines<ReasoningRecord>(path, [](const Json &j, const std::string &) {
            const std::string where = "IFT example";
            ReasoningRecord r;
            r.prompt = requireAs<std::string>(j, "instruction", where);
            r.response = requireAs<std::string>(j, "response", where);
            const Json &meta = requireField(j, "meta", where);
            r.time = requireAs<double>(meta, "t", where);
            r.intersection = requireAs<std::string>(meta, "intersection", where);
            r.action = phaseFromJson(requireField(meta, "action", where), where);
            r.source = requireAs<std::string>(meta, "source", where);
            r.features = featuresFromJson(meta, "o_t", where);
            r.group = requireAs<std::string>(meta, "group", where);
            r.sample = requireAs<int>(meta, "sample", where);
            return r;
        });
    }

}
