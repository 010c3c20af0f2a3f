#pragma once

#include <string>
#include <vector>

namespace okpz {

/// Runs one CLI invocation; args excludes the program name. Returns 0 on
/// success, 1 on an invariant failure, 2 on usage or parameter errors.
int dispatch(const std::vector<std::string>& args);

/// Sets the OpenMP thread count from OKPZ_THREADS unless `threads` > 0.
void configure_threads(int threads);

}  // namespace okpz
