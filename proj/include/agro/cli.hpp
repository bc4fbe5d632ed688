#pragma once

#include <iosfwd>

namespace agro::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // invalid input data, failed validation, missing record
inline constexpr int kExitUsage = 2;    // bad flags or arguments

/// Runs one verb. Data goes to `out` (or the files named by flags), every
/// diagnostic to `err`.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace agro::cli
