#pragma once

namespace textvae {

// Entry point for the textvae tool. Returns the process exit code:
// 0 success, 1 check-suite or runtime failure, 2 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace textvae
