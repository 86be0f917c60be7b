#pragma once

// Command-line surface.
//
//   sympflow generate-data --config C --out DIR [--seed S]
//   sympflow train         --config C --out DIR [--seed S]
//   sympflow rollout       --config C --out DIR --checkpoint F
//   sympflow evaluate      --config C --out DIR --checkpoint F [--seed S]
//   sympflow poincare      --config C --out DIR [--checkpoint F]
//
// Returns the process exit code; failures print one "error: ..." line.

#include <ostream>

namespace sympflow {

int cli_dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int cli_dispatch(int argc, const char* const* argv);

}  // namespace sympflow
