#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace frwcap {

// Command-line front end. Subcommands: extract, validate-sgf, bench-scaling,
// oracle-compare. Reports are JSON on stdout (or --out); a human summary
// goes to the error stream. Returns 0 on success, 1 when a validation or
// comparison lands beyond its threshold, 2 on usage or file errors.
int run_cli(const std::vector<std::string>& args, std::ostream& out,
            std::ostream& err);

int run_cli(int argc, const char* const* argv, std::ostream& out,
            std::ostream& err);

}  // namespace frwcap
