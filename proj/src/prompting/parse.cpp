#include "tsc/prompting.h"
#include "tsc/util.h"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

namespace tsc {

    namespace {

        std::string lower(std::string_view s) {
            std::string out(s);
            std::transform(out.begin(), out.end(), out.begin(),
                           [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
            return out;
        }

    }

    ParsedDecision parseDecision(std::string_view response) {
        ParsedDecision d;
        d.raw = std::string(response);
        d.reasoning = d.raw;
        const std::string text = lower(response);
        const std::string open = "<signal>";
        const std::string close = "</signal>";
        auto closePos = text.rfind(close);
        if (closePos == std::string::npos)
            return d;
        auto openPos = text.rfind(open, closePos);
        if (openPos == std::string::npos)
            return d;
        auto begin = openPos + open.size();
        auto choice = phaseFromString(response.substr(begin, closePos - begin));
        if (!choice)
            return d;
        d.phase = choice;
        d.status = ParseStatus::Ok;
        return d;
    }

    std::optional<std::array<int, kPhaseCount>> queuedTotalsFromPrompt(std::string_view prompt) {
        static const std::regex signalLine(R"(^Signal: (\w+)\s*$)");
        static const std::regex queuedLine(R"(^- Early queued: .*, (\d+) \(Total\)\s*$)");
        std::array<int, kPhaseCount> totals{};
        std::array<bool, kPhaseCount> seen{};
        std::optional<PhaseId> current;
        std::istringstream in{std::string(prompt)};
        std::string line;
        std::smatch m;
        while (std::getline(in, line)) {
            if (std::regex_match(line, m, signalLine)) {
                current = phaseFromString(m[1].str());
            } else if (current && std::regex_match(line, m, queuedLine)) {
                totals[phaseIndex(*current)] = std::stoi(m[1].str());
                seen[phaseIndex(*current)] = true;
                current.reset();
            }
        }
        if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
            return std::nullopt;
        return totals;
    }

}
