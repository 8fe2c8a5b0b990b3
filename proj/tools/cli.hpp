#pragma once

// Command line front end. Exit codes: 0 success, 1 usage, 2 data error,
// 3 learner error.

#include <iosfwd>

namespace dtriage::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitLearner = 3;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace dtriage::cli
