#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace convocode {

/// Minimal RFC-4180-style CSV support: quoted fields, embedded commas,
/// doubled quotes, \r\n or \n line endings.
namespace csv {

using Row = std::vector<std::string>;

std::vector<Row> read_file(const std::filesystem::path& path);

std::string escape(const std::string& field);
std::string join(const Row& row);

void write_file(const std::filesystem::path& path, const std::vector<Row>& rows);

}  // namespace csv

}  // namespace convocode
