#include "tsc/reasoning_record.h"

#include <algorithm>

namespace tsc {

    std::vector<ReasoningRecord> filterTrajectories(const std::vector<ReasoningRecord> &records,
                                                    const CriticParams &params) {
        std::vector<ReasoningRecord> kept;
        for (const auto &r : records) {
            if (r.fallback)
                continue;
            auto q = forward(params, r.features);
            double best = *std::max_element(q.begin(), q.end());
            if (q[phaseIndex(r.action)] >= best)
                kept.push_back(r);
        }
        return kept;
    }

}
