#pragma once

namespace rnmrf {

// Full command-line driver. Returns the process exit code: 0 success,
// 1 task failure, 2 usage error.
int run_cli(int argc, const char* const* argv);

}  // namespace rnmrf
