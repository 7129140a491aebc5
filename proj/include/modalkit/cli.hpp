#pragma once

namespace modalkit::cli {

// Command-line entry point. Exit codes: 0 success, 2 configuration error,
// 3 data error, 4 numerical failure. Errors are reported as a JSON object on
// stderr. MODALKIT_LOG=off|error|warn|info|debug controls diagnostics.
int run(int argc, const char* const* argv);

}  // namespace modalkit::cli
