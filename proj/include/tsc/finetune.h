#pragma once

#include "tsc/critic.h"
#include "tsc/json_io.h"
#include "tsc/reasoning_record.h"

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tsc {

    /// Per-token log-probabilities log P(y_w | X, Y_<w) of one response.
    using TokenLogProbs = std::vector<double>;

    // Negated sum of token log-probabilities. Throws EmptySequence.
    double iftNll(std::span<const double> tokens);
    // Mean token log-probability. Throws EmptySequence.
    double tokenAvgLogLik(std::span<const double> tokens);

    struct RankingEntry {
        std::string trajectory;
        double p = 0.0;  // token-averaged log-likelihood
        double q = 0.0;  // critic score
        bool operator==(const RankingEntry &) const = default;
    };

    struct RankingBatch {
        std::string group;
        std::vector<RankingEntry> entries;
        double beta = 1.0;
        bool operator==(const RankingBatch &) const = default;
    };

    struct RbcResult {
        double loss = 0.0;
        std::vector<double> gradient;  // d loss / d p_i, aligned with entries
        std::size_t pairs = 0;         // ordered pairs with q_i > q_j
    };

    /// Ranking loss with a boundary term over all ordered pairs with strictly higher q:
    /// log(1 + sum [exp(p_j - p_i) + exp(2 p_j* - 2 beta - p_i - p_j)]), where p_j* is the
    /// smallest p among trajectories scored above j.
    RbcResult rbcLoss(const RankingBatch &batch);

    // Stable identifier of a trajectory: "<intersection>@<t>#<sample>".
    std::string trajectoryId(const ReasoningRecord &record);

    using LogProbSource = std::function<std::optional<TokenLogProbs>(const ReasoningRecord &)>;

    /// One batch per distinct prompt, in order of first appearance. Records decided by
    /// the fallback policy are skipped. Throws MissingLogProbs.
    std::vector<RankingBatch> buildRankingBatches(const std::vector<ReasoningRecord> &records,
                                                  const CriticParams &critic, const LogProbSource &source,
                                                  double beta = 1.0);

    // Token log-probabilities keyed by trajectory id; JSONL {"trajectory", "logprobs"}.
    std::map<std::string, TokenLogProbs> loadLogProbs(const std::filesystem::path &path);

    Json toJson(const RankingBatch &batch);
    RankingBatch rankingBatchFromJson(const Json &j);
    void saveRankingBatches(const std::vector<RankingBatch> &batches, const std::filesystem::path &path);
    std::vector<RankingBatch> loadRankingBatches(const std::filesystem::path &path);

    /// JSONL {instruction, response, meta}. Every response must end in a signal tag that
    /// parses back to the record's action (ParseError otherwise). Returns the count.
    std::size_t exportIftDataset(const std::vector<ReasoningRecord> &records, const std::filesystem::path &path);
    std::vector<ReasoningRecord> importIftDataset(const std::filesystem::path &path);

}
