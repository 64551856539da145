#pragma once

#include <iosfwd>

namespace tvsh::cli {

/// Parses argv, dispatches to the selected command and returns the exit code.
int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tvsh::cli
