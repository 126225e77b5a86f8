#pragma once

#include <string>

namespace textvae {

// Writes to a temp file in the target directory, then renames over path, so a
// reader never observes a partial file. Creates parent directories as needed.
void write_file_atomic(const std::string& path, const std::string& content);

// Whole file as bytes; IoError if unreadable.
std::string read_file(const std::string& path);

}  // namespace textvae
