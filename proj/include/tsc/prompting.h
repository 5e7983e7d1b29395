#pragma once

#include "tsc/observe.h"

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>

namespace tsc {

    inline constexpr std::string_view kPromptTemplateVersion = "v1";

    /// Fixed text surrounding the observation. Defaults reproduce the reference
    /// template word for word.
    struct PromptSections {
        std::string scene;
        std::string task;
        std::string knowledge;
        std::string actionSpace;

        static PromptSections defaults();
        // Reads scene.txt, task.txt, knowledge.txt and action_space.txt from `dir`.
        static PromptSections load(const std::filesystem::path &dir);
        bool operator==(const PromptSections &) const = default;
    };

    struct PromptText {
        std::string text;
        std::string intersection;
        double time = 0.0;
    };

    /// Blocks are printed in the order ETWT, NTST, ELWL, NLSL. Throws TemplateError
    /// when default sections are used with observations that are not three-segment,
    /// or when any section is empty.
    PromptText renderPrompt(const IntersectionObservation &obs, const PromptSections &sections);

    enum class ParseStatus { Ok, Fallback };

    struct ParsedDecision {
        std::optional<PhaseId> phase;
        std::string reasoning;
        std::string raw;
        ParseStatus status = ParseStatus::Fallback;
    };

    // The last <signal>...</signal> span wins; an invalid last span is a Fallback.
    ParsedDecision parseDecision(std::string_view response);

    // Per-signal early-queued totals read back from a rendered prompt, in
    // ETWT, ELWL, NTST, NLSL order. Empty if the prompt lacks any of the four blocks.
    std::optional<std::array<int, kPhaseCount>> queuedTotalsFromPrompt(std::string_view prompt);

}
