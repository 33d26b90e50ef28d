#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cretok::io {

std::string read_file(const std::filesystem::path& path);
/// Writes through a temporary sibling and renames, so readers never observe
/// a half-written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

std::string sha256_hex(std::string_view bytes);

std::string base64_encode(std::span<const std::uint8_t> bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

/// RFC 4180-style CSV: comma separated, double-quote escaping, LF line ends.
std::vector<std::string> csv_split(std::string_view line);
std::string csv_escape(std::string_view field);
std::string csv_join(const std::vector<std::string>& fields);

/// Parsed CSV file. Lines starting with '#' before the header are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  /// 1-based source line of each row, for error messages.
  std::vector<std::size_t> lines;

  std::size_t column(std::string_view name) const;
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, std::string_view source_name);

}  // namespace cretok::io
