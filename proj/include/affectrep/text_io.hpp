#pragma once

// Plain columnar text tables with a "# key: value" preamble. Every numeric
// file the toolkit writes goes through here so that values round-trip
// exactly (17 significant digits).

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace affectrep {

inline constexpr int kFormatVersion = 1;

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string format_real(double value);

std::string sha256_hex(std::string_view data);

struct TextTable {
    std::map<std::string, std::string> meta;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(const std::string& name) const;
    std::vector<double> column(const std::string& name) const;
};

/// `source` names the input in error messages. Rows must have one value per
/// column; empty cells and unparsable numbers are errors naming the line.
TextTable parse_table(std::string_view text, const std::string& source);
std::string render_table(const TextTable& table);

}  // namespace affectrep
