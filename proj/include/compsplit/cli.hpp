#pragma once

namespace compsplit {

/// Command-line entry point. Exit status: 0 success, 1 validation or data
/// error, 2 usage error.
int cli_dispatch(int argc, const char* const* argv);

}  // namespace compsplit
