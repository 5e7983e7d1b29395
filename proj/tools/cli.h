#pragma once

#include "tsc/json_io.h"

#include <string>
#include <vector>

namespace tsc::cli {

    enum ExitCode { Ok = 0, ConfigFailure = 1, IoFailure = 2, BackendFailure = 3, Divergence = 4 };

    /// Entry point of tscctl; returns the process exit code.
    int runCli(const std::vector<std::string> &args);

    /// Defaults <- config file <- flag overrides (objects merge key by key).
    Json resolveConfig(const Json &defaults, const Json &file, const Json &flags);

    Json defaultRunConfig();
    Json defaultTrainConfig();

}
