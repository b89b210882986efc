#pragma once

#include <iosfwd>

namespace appeval {

/// Entry point of the `appeval` command line. Returns 0 on success, 1 on data or
/// model errors and 2 on usage errors.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace appeval
