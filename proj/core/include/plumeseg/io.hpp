#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace plumeseg::io {

/// Shortest decimal text that parses back to the same double; "nan" for NaN.
std::string format_double(double value);
std::string format_int(std::int64_t value);

/// Strict parse of the whole field; throws ValidationError naming `what`.
double parse_double(std::string_view text, std::string_view what = "number");
std::int64_t parse_int(std::string_view text, std::string_view what = "integer");

std::vector<std::string_view> split(std::string_view line, char sep = ',');
std::string_view trim(std::string_view text);

/// Comma-separated table with a mandatory header row.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws ValidationError unless the header equals `expected` exactly.
    void require_header(const std::vector<std::string>& expected, std::string_view source) const;
};

CsvTable parse_csv(std::string_view text, std::string_view source = "<memory>");

std::string read_file(const std::filesystem::path& path);

/// Writes to a sibling temporary file and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

}  // namespace plumeseg::io
