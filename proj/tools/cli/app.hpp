#pragma once

#include <iosfwd>

namespace flowlag::cli {

// Entry point of the flowlag executable; returns the process exit code.
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

// Applies FLOWLAG_THREADS (positive integer) to Eigen's thread count.
void apply_thread_limit();

}  // namespace flowlag::cli
