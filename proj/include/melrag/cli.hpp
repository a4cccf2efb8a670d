#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace melrag {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInvalid = 1;
inline constexpr int kExitBackendFailure = 2;

// Entry point of the melrag tool. args excludes the program name.
//
//   split | index | retrieve | classify | evaluate | compare | dump-prompt
//
// Returns 0 on success, 1 on usage or validation errors, 2 when the backend
// failed for at least one case (predictions are still written).
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace melrag
