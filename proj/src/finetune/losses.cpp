#include "tsc/finetune.h"
#include "tsc/errors.h"

#include <cmath>
#include <numeric>

namespace tsc {

    double iftNll(std::span<const double> tokens) {
        if (tokens.empty())
            throw EmptySequence("token sequence is empty");
        return -std::accumulate(tokens.begin(), tokens.end(), 0.0);
    }

    double tokenAvgLogLik(std::span<const double> tokens) {
        if (tokens.empty())
            throw EmptySequence("token sequence is empty");
        return std::accumulate(tokens.begin(), tokens.end(), 0.0) / static_cast<double>(tokens.size());
    }

    RbcResult rbcLoss(const RankingBatch &batch) {
        const auto &e = batch.entries;
        const std::size_t k = e.size();
        RbcResult out;
        out.gradient.assign(k, 0.0);
        if (k == 0)
            return out;
        std::vector<double> dS(k, 0.0);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; j++) {
            // j* = argmin of p over trajectories scored strictly above j; first index on ties.
            std::optional<std::size_t> star;
            for (std::size_t m = 0; m < k; m++)
                if (e[m].q > e[j].q && (!star || e[m].p < e[*star].p))
                    star = m;
            if (!star)
                continue;
            for (std::size_t i = 0; i < k; i++) {
                if (!(e[i].q > e[j].q))
                    continue;
                out.pairs++;
                double a = std::exp(e[j].p - e[i].p);
                double b = std::exp(2.0 * e[*star].p - 2.0 * batch.beta - e[i].p - e[j].p);
                sum += a + b;
                dS[j] += a - b;
                dS[i] += -a - b;
                dS[*star] += 2.0 * b;
            }
        }
        out.loss = std::log1p(sum);
        for (std::size_t i = 0; i < k; i++)
            out.gradient[i] = dS[i] / (1.0 + sum);
        return out;
    }

}
