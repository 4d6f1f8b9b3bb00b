#pragma once

// Command-line front end: subcommands, CSV and manifest output.

#include <ostream>
#include <string>
#include <string_view>

#include "mrsim/config.hpp"

namespace mrsim::cli {

/// `%.9g`, with nan/inf spelled out.
std::string format_g9(double v);

/// SHA-1 of "blob <len>\0<content>", hex encoded (what `git hash-object` prints).
std::string git_blob_sha1(std::string_view content);

/// Canonical "key = value\n" text of a config echo.
std::string echo_text(const RunConfig& rc);

/// Exit codes: 0 success, 1 invalid config or failed run, 2 usage error
/// (including a missing config file).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mrsim::cli
