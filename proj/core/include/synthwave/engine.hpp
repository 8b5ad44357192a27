#pragma once

#include <optional>
#include <string>

#include "synthwave/report.hpp"
#include "synthwave/scenario.hpp"

namespace synthwave::io {

struct EngineOptions {
    std::string out_dir = "out";
    std::string format = "csv";          // csv | json
    std::optional<uint64_t> seed_override;
    bool write_streams = true;           // counts: emit binary timestamp files
};

/// Commands: synthesize, conserve, simulate, sweep, counts, franson, report.
RunReport run_command(const std::string& command, const Scenario& scenario,
                      const EngineOptions& options = {});

/// Exit-code policy: 0 ok, 2 input error, 3 convergence/threshold, 4 internal.
int exit_code_for(const std::exception& error);

}  // namespace synthwave::io
