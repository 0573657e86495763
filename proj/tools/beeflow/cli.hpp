#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace beeflow::cli {

/// Exit status: 0 ok, 1 domain error, 2 usage or parse error.
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace beeflow::cli
