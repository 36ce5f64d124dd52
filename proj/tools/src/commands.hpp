#pragma once

#include <string>
#include <vector>

#include "cli11.hpp"

namespace egofuture::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitGeometry = 3;
inline constexpr int kExitEmptyBin = 4;

/// Parses and executes one command line (without the program name).
int run(const std::vector<std::string>& args);

}  // namespace egofuture::cli
