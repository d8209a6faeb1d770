#pragma once

#include <iosfwd>

namespace addgxe {

inline constexpr const char* kVersion = "1.0.0";

/// Entry point behind the addgxe binary. Returns 0 on success, 2 on a usage
/// error and 1 on a computation error; diagnostics go to `err` as one line.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace addgxe
