#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace iomc {

std::vector<unsigned char> read_file_bytes(const std::filesystem::path& path);
std::string read_text_file(const std::filesystem::path& path);

/// Writes via a sibling temp file and rename so readers never see partial files.
void write_file_atomic(const std::filesystem::path& path, const std::vector<unsigned char>& bytes);
void write_file_atomic(const std::filesystem::path& path, std::string_view text);

}  // namespace iomc
