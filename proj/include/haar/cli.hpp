#pragma once
// Command-line front end. run() parses argv, dispatches to the computation
// modules and writes one report to `out`.
//
// Exit codes: 0 success, 1 input or usage error, 2 validation failure (the
// report is still written and names the failing invariant).

#include <cstdint>
#include <ostream>

namespace haar::cli {

inline constexpr std::uint64_t kDefaultSeed = 20240229;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace haar::cli
