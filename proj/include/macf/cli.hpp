#pragma once

#include <string>
#include <vector>

namespace macf {

// Full CLI dispatch. Returns 0 on success, 1 on usage errors, 2 on runtime
// failures. `args` excludes the program name.
int cli_main(const std::vector<std::string>& args);

}  // namespace macf
