#pragma once

#include <chrono>
#include <filesystem>
#include <string>

namespace ginnlp {

struct ProcessResult {
    int exit_status { -1 }; // exit code, or -1 when killed by a signal
    bool timed_out { false };
    std::string out;
    std::string err;
};

// Runs `command` through /bin/sh -c with stdout and stderr captured. The child
// is killed (SIGKILL to its process group) once `timeout` elapses.
// Throws Error if the process cannot be started.
[[nodiscard]] ProcessResult run_shell(const std::string& command, std::chrono::milliseconds timeout,
                                      const std::filesystem::path& working_dir = {});

} // namespace ginnlp
