#pragma once

#include <iosfwd>

namespace fate {

/// Entry point of the `fate` tool. Returns the process exit status:
/// 0 ok, 2 configuration, 3 data, 4 numerical, 5 bound ordering (strict mode).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fate
