#include "tsc/prompting.h"
#include "tsc/errors.h"
#include "tsc/util.h"

#include <sstream>

namespace tsc {

    namespace {

        constexpr std::string_view kScene =
            "A traffic light regulates a four-section intersection with northern, southern, eastern, and "
            "western sections, each containing two lanes: one for through traffic and one for left-turns. "
            "Each lane is further divided into three segments. Segment 1 is the closest to the intersection. "
            "Segment 2 is in the middle. Segment 3 is the farthest. In a lane, there may be early queued "
            "vehicles and approaching vehicles traveling in different segments. Early queued vehicles have "
            "arrived at the intersection and await passage permission. Approaching vehicles will arrive at "
            "the intersection in the future.";

        constexpr std::string_view kTask =
            "Please answer:\n"
            "Which is the most effective traffic signal that will most significantly improve the traffic "
            "condition during the next phase?";

        constexpr std::string_view kKnowledge =
            "Note:\n"
            "The traffic congestion is primarily dictated by the early queued vehicles, with the MOST "
            "significant impact. You MUST pay the MOST attention to lanes with long queue lengths. It is NOT "
            "URGENT to consider vehicles in distant segments since they are unlikely to reach the "
            "intersection soon.";

        constexpr std::string_view kActionSpace =
            "Requirements:\n"
            "- Let's think step by step.\n"
            "- You can only choose one of the signals listed above.\n"
            "- You must follow the following steps to provide your analysis: Step 1: Provide your analysis "
            "for identifying the optimal traffic signal. Step 2: Answer your chosen signal.\n"
            "- Your choice can only be given after finishing the analysis.\n"
            "- Your choice must be identified by the tag: <signal>YOUR_CHOICE</signal>.";

        constexpr std::string_view kStateIntro =
            "The traffic light has 4 signal phases. Each signal relieves vehicles' flow in the group of two "
            "specific lanes. The state of the intersection is listed below. It describes:\n"
            "- The group of lanes relieving vehicles' flow under each traffic light phase.\n"
            "- The number of early queued vehicles of the allowed lanes of each signal.\n"
            "- The number of approaching vehicles in different segments of the allowed lanes of each signal.";

        constexpr std::array<PhaseId, kPhaseCount> kRenderOrder = {
            PhaseId::ETWT, PhaseId::NTST, PhaseId::ELWL, PhaseId::NLSL};

        std::string_view allowedLanesText(PhaseId p) {
            switch (p) {
                case PhaseId::ETWT: return "Eastern and western through lanes";
                case PhaseId::ELWL: return "Eastern and western left-turn lanes";
                case PhaseId::NTST: return "Northern and southern through lanes";
                case PhaseId::NLSL: return "Northern and southern left-turn lanes";
            }
            return "";
        }

        std::string stripOneNewline(std::string s) {
            if (!s.empty() && s.back() == '\n')
                s.pop_back();
            if (!s.empty() && s.back() == '\r')
                s.pop_back();
            return s;
        }

        void countLine(std::ostringstream &out, std::string_view label, const PhaseObservation &p, int a, int b,
                       int total) {
            out << "- " << label << ": " << a << " (" << toString(p.approaches[0]) << "), " << b << " ("
                << toString(p.approaches[1]) << "), " << total << " (Total)";
        }

    }

    PromptSections PromptSections::defaults() {
        return {std::string(kScene), std::string(kTask), std::string(kKnowledge), std::string(kActionSpace)};
    }

    PromptSections PromptSections::load(const std::filesystem::path &dir) {
        return {stripOneNewline(readFile(dir / "scene.txt")), stripOneNewline(readFile(dir / "task.txt")),
                stripOneNewline(readFile(dir / "knowledge.txt")),
                stripOneNewline(readFile(dir / "action_space.txt"))};
    }

    PromptText renderPrompt(const IntersectionObservation &obs, const PromptSections &sections) {
        if (sections.scene.empty() || sections.task.empty() || sections.knowledge.empty() ||
            sections.actionSpace.empty())
            throw TemplateError("prompt sections must be non-empty");
        const int segments = obs.segmentCount();
        for (const auto &p : obs.phases)
            for (const auto &l : p.lanes)
                if (static_cast<int>(l.approaching.size()) != segments)
                    throw TemplateError("lanes disagree on segment count");
        if (segments != 3 && sections.scene == kScene)
            throw TemplateError("the default scene text describes three segments per lane, got " +
                                std::to_string(segments));

        std::ostringstream out;
        out << sections.scene << "\n\n" << kStateIntro << "\n\n";
        bool first = true;
        for (PhaseId id : kRenderOrder) {
            const PhaseObservation &p = obs.phase(id);
            if (!first)
                out << '\n';
            first = false;
            out << "Signal: " << toString(id) << '\n';
            out << "Allowed lanes: " << allowedLanesText(id) << '\n';
            countLine(out, "Early queued", p, p.lanes[0].queued, p.lanes[1].queued, p.queuedTotal());
            for (int s = 1; s <= segments; s++) {
                out << '\n';
                countLine(out, "Segment " + std::to_string(s), p, p.lanes[0].approaching[s - 1],
                          p.lanes[1].approaching[s - 1], p.segmentTotal(s));
            }
        }
        out << "\n\n" << sections.task << "\n\n" << sections.knowledge << "\n\n" << sections.actionSpace;
        return {out.str(), obs.intersection, obs.time};
    }

}
