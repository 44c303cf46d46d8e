#pragma once

#include <cstdint>
#include <iosfwd>

namespace plrt {

/// Runs one `plrt` subcommand. Returns 0 on success, 2 on a usage error and
/// 1 on a runtime error; diagnostics go to `err`.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

/// PLRT_SEED when set to an unsigned integer, otherwise 0.
std::uint64_t default_seed();

} // namespace plrt
