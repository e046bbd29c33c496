#pragma once

#include <iosfwd>

namespace scanet::cli {

/// Entry point of the `scanet` tool. Returns 0 on success, 1 on runtime failure and 2 on a
/// command-line error (after printing usage).
int cli_main(int argc, const char* const* argv);
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace scanet::cli
