#pragma once

#include <string>

namespace fracpme::io {

// Writes to a temporary sibling and renames over the target, so readers
// never see a partial file. Throws IoError.
void write_atomic(const std::string& path, const std::string& content);

std::string read_file(const std::string& path);

// Creates the directory and parents. Throws IoError.
void ensure_dir(const std::string& path);

std::string join(const std::string& dir, const std::string& name);

}  // namespace fracpme::io
