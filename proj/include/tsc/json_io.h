#pragma once

#include "tsc/observe.h"

#include "json.hpp"

namespace tsc {

    using Json = nlohmann::ordered_json;

    Json toJson(const IntersectionObservation &obs);
    // Throws ParseError naming the missing or mistyped field.
    IntersectionObservation observationFromJson(const Json &j);

    // Strict accessors that raise ParseError with `where` context.
    const Json &requireField(const Json &obj, const char *key, const std::string &where);
    template <typename T>
    T requireAs(const Json &obj, const char *key, const std::string &where);

    PhaseId phaseFromJson(const Json &j, const std::string &where);

}
