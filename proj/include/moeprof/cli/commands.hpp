#pragma once

#include <exception>
#include <string>
#include <vector>

namespace moeprof::cli {

enum ExitCode : int { kOk = 0, kConfigExit = 1, kDataExit = 2, kNumericExit = 3 };

/// Maps the error taxonomy onto process exit codes.
int exit_code_for(const std::exception& e);

/// Sets the spdlog level from MOE_PROFILER_LOG (error, info or debug).
void init_logging();

/// Full command-line entry point; returns the process exit code.
int run(int argc, const char* const* argv);
int run(const std::vector<std::string>& args);

}  // namespace moeprof::cli
