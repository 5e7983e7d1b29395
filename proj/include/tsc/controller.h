#pragma once

#include "tsc/netmodel.h"
#include "tsc/observe.h"

#include <string>

namespace tsc {

    /// A signal policy queried at every switching step of an intersection.
    /// Implementations must return a phase from the four-phase action space and be
    /// safe to call concurrently for different intersections.
    class Controller {
    public:
        virtual ~Controller() = default;
        virtual PhaseId decide(const IntersectionObservation &obs, double t) = 0;
        virtual std::string name() const = 0;
        virtual bool isDeterministic() const = 0;
    };

}
