#pragma once

namespace spiro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInput = 2;
inline constexpr int kExitAnalysis = 3;

// Entry point for the `spiro` tool: analyze, calibrate, synth, serve.
int run(int argc, char** argv);

}  // namespace spiro::cli
