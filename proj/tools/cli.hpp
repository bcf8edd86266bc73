#pragma once

#include <iosfwd>

namespace kusuri::cli {

// Exit codes: 0 success, 1 runtime failure, 2 bad configuration or usage.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace kusuri::cli
