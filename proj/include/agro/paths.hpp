#pragma once

#include <filesystem>

namespace agro {

/// Directory holding the shipped data files. `AGRO_DATA_DIR` overrides the build-time default.
std::filesystem::path data_dir();

/// Reads a whole file; throws agro::Error when it cannot be opened.
std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary and renames over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace agro
