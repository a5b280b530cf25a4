#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hybrid_spkr::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitIo = 3;
inline constexpr int kExitNumeric = 4;

// Entry point shared by the executable and the tests. Never throws.
int run(int argc, char** argv, std::ostream& out, std::ostream& err);
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hybrid_spkr::cli
