#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace modify::acceptance {

struct Options {
    std::string work_dir = "acceptance_out";  // scratch space for emitted files
    std::size_t jobs = 2;                     // parallel training runs
    std::vector<int> only;                    // criterion numbers; empty = all
};

// Runs the acceptance criteria, printing one PASS/FAIL line per criterion
// plus the measured quantities. Returns the number of failed criteria.
int run_all(const Options& options);

}  // namespace modify::acceptance
